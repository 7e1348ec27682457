"""Assignment-solver backend selection.

The compiled Cython kernel is preferred; the numpy implementation is the
fallback when the extension is unavailable or SMOOTHMATCH_PURE_PYTHON is
set. Both produce identical results (see benchmarks/bench_assignment.py for
the speed gap).
"""

from __future__ import annotations

import os

if os.environ.get("SMOOTHMATCH_PURE_PYTHON"):
    from . import _solver_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _solver_cy as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _solver_py as _impl

        BACKEND = "python"

solve_dense = _impl.solve_dense
