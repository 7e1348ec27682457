import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "smoothmatch._solver_cy",
                ["src/smoothmatch/_solver_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    # Pure-python fallback still works; the package selects it at import.
    ext_modules = []

setup(ext_modules=ext_modules)
