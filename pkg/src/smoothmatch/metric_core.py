"""Ground-metric primitives.

Points in the unit cube, sigma-smooth request distributions (uniform and
histogram kinds with a checkable density certificate), and the Poisson
binomial / majorization utilities that the concentration arguments rest on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

# Tolerance for exact-arithmetic identities (mass normalization, prefix-sum
# equality, pmf normalization). Double-precision convolution error at the
# sizes we allow is orders of magnitude below this.
EXACT_TOL = 1e-12

MAX_EXACT_PB = 30


def as_points(points, d: int | None = None) -> np.ndarray:
    """Validate and normalize an (n, d) array of points in [0, 1]^d.

    Accepts a flat array for d=1. Raises ValueError on coordinates outside
    the closed unit cube or on dimension mismatch.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"points must be an (n, d) array, got shape {arr.shape}")
    if d is not None and arr.shape[1] != d:
        raise ValueError(f"expected dimension {d}, got {arr.shape[1]}")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("coordinates must lie in [0, 1]")
    return arr


def euclid_dist(a, b) -> float:
    """Euclidean distance between two points (1-d coordinate vectors)."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def pairwise_dists(S: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Dense Euclidean distance matrix between two (n, d) point sets."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    diff = S[:, None, :] - R[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


@dataclass(eq=False)
class SmoothDistribution:
    """A sigma-smooth distribution on [0, 1]^d.

    kind 'uniform' is exactly 1-smooth. kind 'histogram' holds per-cell
    masses on a regular grid with ``resolution`` cells per axis; smoothness
    is certified by the per-cell density cap mass * resolution**d <= 1/sigma.
    """

    kind: str
    sigma: float
    d: int
    resolution: int = 64
    masses: np.ndarray | None = None
    _cdf: np.ndarray | None = field(default=None, repr=False, init=False)

    def __post_init__(self):
        if self.kind not in ("uniform", "histogram"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if not (0.0 < self.sigma <= 1.0):
            raise ValueError("sigma must lie in (0, 1]")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.kind == "histogram":
            if self.masses is None:
                raise ValueError("histogram kind requires masses")
            m = np.asarray(self.masses, dtype=float)
            if m.shape != (self.resolution,) * self.d:
                m = m.reshape((self.resolution,) * self.d)
            if m.min() < 0.0:
                raise ValueError("cell masses must be nonnegative")
            if abs(m.sum() - 1.0) > EXACT_TOL:
                raise ValueError(f"total mass {m.sum()!r} != 1")
            self.masses = m
            if not self.density_cap_ok():
                raise ValueError(
                    f"density cap violated: max cell density "
                    f"{self.max_density():.6g} > 1/sigma = {1.0 / self.sigma:.6g}"
                )
            self._cdf = np.cumsum(m.ravel())
        elif self.masses is not None:
            raise ValueError("uniform kind takes no masses")

    @classmethod
    def uniform(cls, d: int) -> "SmoothDistribution":
        return cls(kind="uniform", sigma=1.0, d=d)

    @classmethod
    def histogram(cls, masses, sigma: float, d: int | None = None) -> "SmoothDistribution":
        m = np.asarray(masses, dtype=float)
        if d is None:
            d = m.ndim if m.ndim > 1 else 1
        if m.ndim > 1:
            g = m.shape[0]
        else:
            g = round(len(m) ** (1.0 / d))
            if g**d != len(m):
                raise ValueError("flat masses length is not a d-th power")
        return cls(kind="histogram", sigma=sigma, d=d, resolution=g, masses=m)

    def max_density(self) -> float:
        if self.kind == "uniform":
            return 1.0
        return float(self.masses.max()) * self.resolution**self.d

    def density_cap_ok(self, tol: float = 1e-9) -> bool:
        """The testable sigma-smoothness certificate."""
        return self.max_density() <= (1.0 + tol) / self.sigma

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Draw points; cell chosen by mass, then uniform within the cell."""
        n = 1 if size is None else size
        if self.kind == "uniform":
            pts = rng.random((n, self.d))
        else:
            u = rng.random(n)
            flat = np.searchsorted(self._cdf, u, side="right")
            flat = np.minimum(flat, self._cdf.size - 1)
            coords = np.column_stack(np.unravel_index(flat, self.masses.shape))
            pts = (coords + rng.random((n, self.d))) / self.resolution
        return pts[0] if size is None else pts

    def cell_mass(self, lo_cells: np.ndarray, hi_cells: np.ndarray) -> float:
        """Total mass of the axis-aligned block of cells [lo, hi) per axis."""
        if self.kind == "uniform":
            vol = np.prod((hi_cells - lo_cells) / self.resolution)
            return float(vol)
        sl = tuple(slice(int(a), int(b)) for a, b in zip(lo_cells, hi_cells))
        return float(self.masses[sl].sum())

    def cdf1d(self, y: float) -> float:
        """CDF at y for d=1 distributions."""
        if self.d != 1:
            raise ValueError("cdf1d requires a 1-dimensional distribution")
        y = min(max(y, 0.0), 1.0)
        if self.kind == "uniform":
            return y
        g = self.resolution
        pos = y * g
        k = min(int(pos), g - 1)
        cum = float(self.masses[:k].sum())
        return cum + float(self.masses[k]) * (pos - k) if pos < g else 1.0

    def cdf1d_integral(self, a: float, b: float) -> float:
        """Exact integral of the CDF over [a, b] (piecewise-linear CDF)."""
        if self.d != 1:
            raise ValueError("cdf1d_integral requires a 1-dimensional distribution")
        if not (0.0 <= a <= b <= 1.0):
            raise ValueError("integration bounds must satisfy 0 <= a <= b <= 1")
        if self.kind == "uniform":
            return (b * b - a * a) / 2.0
        g = self.resolution
        # CDF is linear on each cell, so the trapezoid rule is exact per cell.
        knots = np.unique(np.concatenate([[a, b], np.arange(0, g + 1) / g]))
        knots = knots[(knots >= a) & (knots <= b)]
        vals = np.array([self.cdf1d(t) for t in knots])
        return float(np.trapezoid(vals, knots))

    def to_json(self) -> str:
        obj = {
            "kind": self.kind,
            "sigma": self.sigma,
            "d": self.d,
            "resolution": self.resolution,
            "masses": [] if self.kind == "uniform" else self.masses.ravel().tolist(),
        }
        return json.dumps(obj)

    @classmethod
    def from_json(cls, text: str) -> "SmoothDistribution":
        obj = json.loads(text)
        if obj["kind"] == "uniform":
            return cls(
                kind="uniform",
                sigma=float(obj["sigma"]),
                d=int(obj["d"]),
                resolution=int(obj["resolution"]),
            )
        masses = np.asarray(obj["masses"], dtype=float)
        return cls(
            kind="histogram",
            sigma=float(obj["sigma"]),
            d=int(obj["d"]),
            resolution=int(obj["resolution"]),
            masses=masses,
        )


def subcube_histogram(
    d: int, sigma: float, rng: np.random.Generator, resolution: int = 64
) -> SmoothDistribution:
    """Histogram with all mass on a random cell-aligned subcube of volume ~sigma.

    The side is ceil(sigma^(1/d) * g) cells, which keeps the per-cell density
    at or below 1/sigma (tight whenever sigma^(1/d) * g is an integer).
    """
    g = resolution
    side = math.ceil(sigma ** (1.0 / d) * g - 1e-9)
    side = min(max(side, 1), g)
    lo = rng.integers(0, g - side + 1, size=d)
    masses = np.zeros((g,) * d)
    sl = tuple(slice(int(a), int(a) + side) for a in lo)
    masses[sl] = 1.0 / side**d
    return SmoothDistribution(kind="histogram", sigma=sigma, d=d, resolution=g, masses=masses)


# ---------------------------------------------------------------------------
# Poisson binomial and majorization
# ---------------------------------------------------------------------------


def check_prob_vector(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("probability vector must be 1-dimensional")
    if p.size and (p.min() < 0.0 or p.max() > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    return p


def poisson_binomial_pmf(p) -> np.ndarray:
    """Exact pmf of a sum of independent Bernoulli(p_i) via DP convolution.

    Serves as the brute-force oracle for the concentration checks; limited to
    n <= 30 where double-precision convolution is exact to ~1e-15.
    """
    p = check_prob_vector(p)
    n = p.size
    if n > MAX_EXACT_PB:
        raise ValueError(
            f"n={n} exceeds exact-pmf limit {MAX_EXACT_PB}; use Monte Carlo estimates instead"
        )
    pmf = np.zeros(n + 1)
    pmf[0] = 1.0
    for k, pi in enumerate(p):
        pmf[1 : k + 2] = pmf[1 : k + 2] * (1.0 - pi) + pmf[0 : k + 1] * pi
        pmf[0] *= 1.0 - pi
    return pmf


def mean_abs_dev(pmf, center: float) -> float:
    """E|X - center| for a pmf supported on {0, ..., n}."""
    pmf = np.asarray(pmf, dtype=float)
    k = np.arange(pmf.size)
    return float(np.sum(pmf * np.abs(k - center)))


def pmf_std(pmf) -> float:
    pmf = np.asarray(pmf, dtype=float)
    k = np.arange(pmf.size)
    mean = float(np.sum(pmf * k))
    var = float(np.sum(pmf * (k - mean) ** 2))
    return math.sqrt(max(var, 0.0))


def majorizes(p, q, tol: float = EXACT_TOL) -> bool:
    """Whether p majorizes q: sorted-descending prefix sums of p dominate
    those of q, with equal totals (equality checked to ``tol``)."""
    p = check_prob_vector(p)
    q = check_prob_vector(q)
    if p.size != q.size:
        raise ValueError("majorization requires equal-length vectors")
    ps = np.cumsum(np.sort(p)[::-1])
    qs = np.cumsum(np.sort(q)[::-1])
    if abs(ps[-1] - qs[-1]) > tol:
        return False
    return bool(np.all(ps[:-1] >= qs[:-1] - tol))


def binomial_mad_bound_check(n: int, p: float) -> bool:
    """Check E|Z - EZ| >= std(Z)/sqrt(2) for Z ~ Bin(n, p) via the exact pmf.

    Valid for n >= 2 and p in [1/n, 1 - 1/n].
    """
    if n < 2:
        raise ValueError("requires n >= 2")
    if not (1.0 / n - EXACT_TOL <= p <= 1.0 - 1.0 / n + EXACT_TOL):
        raise ValueError(f"p={p} outside [1/n, 1-1/n] for n={n}")
    pmf = poisson_binomial_pmf(np.full(n, p))
    mad = mean_abs_dev(pmf, n * p)
    return mad >= pmf_std(pmf) / math.sqrt(2.0) - EXACT_TOL
