"""Deterministic dyadic decomposition of [0, 1]^d into a 2^d-ary 2-HST.

Level-i cells are half-open dyadic cubes except that the last interval on
each axis is closed, so points with a coordinate exactly 1.0 land in the
last cell. Leaf ids interleave the per-axis cell bits (Z-order) so that the
dyadic hierarchy and the tree's base-delta node addressing coincide: the
child digit at each level is the d-bit word formed by one bit per axis,
axis 0 most significant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hst import HstTopology, NodeId
from .metric_core import as_points

LOG2_25_12 = math.log2(25.0 / 12.0)


@dataclass(frozen=True)
class DyadicEmbedding:
    d: int
    h: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.h < 1:
            raise ValueError("height must be >= 1")

    @property
    def topology(self) -> HstTopology:
        return HstTopology(delta=2**self.d, alpha=2.0, height=self.h)

    @property
    def num_leaves(self) -> int:
        return 2 ** (self.d * self.h)

    def leaf_index_of(self, points) -> np.ndarray:
        """Vectorized point-to-leaf map; raises on out-of-range coordinates."""
        pts = as_points(points, d=self.d)
        cells = np.minimum((pts * 2**self.h).astype(np.int64), 2**self.h - 1)
        return self._interleave(cells)

    def leaf_of(self, point) -> NodeId:
        return NodeId(0, int(self.leaf_index_of(np.atleast_2d(point))[0]))

    def _interleave(self, cells: np.ndarray) -> np.ndarray:
        """Z-order index from (n, d) per-axis cell indices."""
        z = np.zeros(cells.shape[0], dtype=np.int64)
        for bit in range(self.h):
            for axis in range(self.d):
                z |= ((cells[:, axis] >> bit) & 1) << (bit * self.d + (self.d - 1 - axis))
        return z

    def leaf_cell(self, leaf_index: int) -> tuple[int, ...]:
        """Per-axis cell indices of a leaf (inverse of the Z-order map)."""
        coords = [0] * self.d
        for bit in range(self.h):
            for axis in range(self.d):
                coords[axis] |= ((leaf_index >> (bit * self.d + (self.d - 1 - axis))) & 1) << bit
        return tuple(coords)

    def leaf_masses(self, dist) -> np.ndarray:
        """Probability mass of each leaf cell under ``dist``, in leaf-id order.

        Exact for uniform distributions and for histograms whose resolution is
        a multiple of 2^h.
        """
        if dist.d != self.d:
            raise ValueError("distribution dimension does not match embedding")
        n_leaves = self.num_leaves
        if dist.kind == "uniform":
            return np.full(n_leaves, 1.0 / n_leaves)
        g = dist.resolution
        side = 2**self.h
        if g % side != 0:
            raise ValueError(f"histogram resolution {g} is not a multiple of 2^h = {side}")
        c = g // side
        shape = sum(((side, c) for _ in range(self.d)), ())
        grid = dist.masses.reshape(shape).sum(axis=tuple(range(1, 2 * self.d, 2)))
        coords = np.indices((side,) * self.d).reshape(self.d, -1).T
        z = self._interleave(coords)
        out = np.zeros(n_leaves)
        out[z] = grid.ravel()
        return out


def dyadic_leaf(emb: DyadicEmbedding, x) -> NodeId:
    """Leaf of the embedding that contains x."""
    return emb.leaf_of(x)


def choose_height(n: int, d: int, variant: str) -> int:
    """Tree height minimizing the lifted cost bound: floor(log2(n)/d), except
    floor(log2(n) / (2 log2(25/12))) for the random-subtree variant at d=2.
    Clamped below at 1."""
    if n < 2:
        raise ValueError("requires n >= 2")
    if variant not in ("rs", "bbgn"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "rs" and d == 2:
        h = math.floor(math.log2(n) / (2.0 * LOG2_25_12))
    else:
        h = math.floor(math.log2(n) / d)
    return max(h, 1)


def translate_cost(d: int, h: int, n: int, hst_cost: float) -> float:
    """Euclidean cost bound for a lifted algorithm from its HST cost:
    sqrt(d) * (hst_cost / 4 + n * 2^(-h))."""
    if min(d, h) < 1 or n < 0 or hst_cost < 0:
        raise ValueError("inputs must be nonnegative (d, h >= 1)")
    return math.sqrt(d) * (hst_cost / 4.0 + n * 2.0**-h)


class LiftedMatcher:
    """Euclidean online algorithm obtained by running an HST algorithm on the
    embedded instance and matching each request to a preimage server.

    ``inner_factory(topology, server_leaf_indices)`` must produce a session
    with ``serve_leaf(leaf_index, rng) -> leaf_index`` that consumes one
    available server at the returned leaf. Among same-leaf servers the lowest
    original id is used, which cannot affect the tree cost.
    """

    def __init__(self, emb: DyadicEmbedding, servers, inner_factory):
        self.emb = emb
        self.topology = emb.topology
        self.servers = as_points(servers, d=emb.d)
        self.server_leaves = emb.leaf_index_of(self.servers)
        self.inner = inner_factory(self.topology, self.server_leaves)
        self.pool: dict[int, list[int]] = {}
        for sid in range(len(self.server_leaves) - 1, -1, -1):
            self.pool.setdefault(int(self.server_leaves[sid]), []).append(sid)
        self.hst_cost = 0.0
        self._dist_table = self.topology.leaf_distance_table()

    def serve(self, request, rng) -> int:
        req_leaf = int(self.emb.leaf_index_of(np.atleast_2d(request))[0])
        srv_leaf = self.inner.serve_leaf(req_leaf, rng)
        bucket = self.pool.get(srv_leaf)
        if not bucket:
            raise ContractViolation(f"inner returned leaf {srv_leaf} with no available preimage")
        k = self.topology.lca_height_leaves(req_leaf, srv_leaf)
        self.hst_cost += float(self._dist_table[k])
        return bucket.pop()


def lift_algorithm(e: DyadicEmbedding, inner_factory):
    """Matcher factory for the harness: lifts an HST algorithm factory to a
    Euclidean online algorithm over the embedding."""
    return lambda servers: LiftedMatcher(e, servers, inner_factory)


class ContractViolation(RuntimeError):
    """An online algorithm broke its availability/irrevocability contract."""
