"""Delta-ary alpha-HST topology, node addressing, tree distances, counts.

Nodes are addressed by (height, index): height 0 are leaves, height h is the
root. The index encodes the child-index path from the root in base delta,
most significant digit first, so the ancestor of a node at a higher level is
an integer division away. Edges from a depth-(k-1) node to its depth-k child
have length alpha^(1-k); root edges have length 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class NodeId(NamedTuple):
    height: int
    index: int


@dataclass(frozen=True)
class HstTopology:
    """Value object holding the tree parameters. Counts live elsewhere so one
    topology can serve many instances."""

    delta: int
    alpha: float
    height: int

    def __post_init__(self):
        if self.delta < 2:
            raise ValueError("arity delta must be >= 2")
        if self.alpha < 2.0:
            raise ValueError("separation alpha must be >= 2")
        if self.height < 1:
            raise ValueError("height must be >= 1")

    @property
    def num_leaves(self) -> int:
        return self.delta**self.height

    def nodes_at(self, j: int) -> int:
        if not 0 <= j <= self.height:
            raise ValueError(f"height {j} outside [0, {self.height}]")
        return self.delta ** (self.height - j)

    def check_node(self, node: NodeId) -> None:
        if not (0 <= node.height <= self.height and 0 <= node.index < self.nodes_at(node.height)):
            raise ValueError(f"node {node} does not belong to this topology")

    def edge_above(self, j: int) -> float:
        """Length of the edge from a height-j node to its parent."""
        if not 0 <= j < self.height:
            raise ValueError(f"no parent edge at height {j}")
        return self.alpha ** (j + 1 - self.height)

    def ancestor(self, node: NodeId, at_height: int) -> NodeId:
        self.check_node(node)
        if at_height < node.height or at_height > self.height:
            raise ValueError("ancestor height out of range")
        return NodeId(at_height, node.index // self.delta ** (at_height - node.height))

    def children(self, node: NodeId) -> list[NodeId]:
        self.check_node(node)
        if node.height == 0:
            raise ValueError("leaves have no children")
        base = node.index * self.delta
        return [NodeId(node.height - 1, base + i) for i in range(self.delta)]

    def lca_height(self, u: NodeId, v: NodeId) -> int:
        """Height of the least common ancestor of two leaves."""
        if u.height != 0 or v.height != 0:
            raise ValueError("lca_height is defined on leaves")
        self.check_node(u)
        self.check_node(v)
        return self.lca_height_leaves(u.index, v.index)

    def lca_height_leaves(self, ui: int, vi: int) -> int:
        k = 0
        while ui != vi:
            ui //= self.delta
            vi //= self.delta
            k += 1
        return k

    def leaf_distance(self, k: int) -> float:
        """Tree distance between two leaves whose LCA has height k:
        2 * sum_{m=h-k}^{h-1} alpha^(-m)."""
        if k == 0:
            return 0.0
        h, a = self.height, self.alpha
        return 2.0 * sum(a ** float(-m) for m in range(h - k, h))

    def leaf_distance_table(self) -> np.ndarray:
        return np.array([self.leaf_distance(k) for k in range(self.height + 1)])

    def node_distance(self, u: NodeId, v: NodeId) -> float:
        """Path-length distance between any two nodes of the tree."""
        self.check_node(u)
        self.check_node(v)
        ju, iu = u
        jv, iv = v
        dist = 0.0
        while ju < jv:
            dist += self.edge_above(ju)
            iu //= self.delta
            ju += 1
        while jv < ju:
            dist += self.edge_above(jv)
            iv //= self.delta
            jv += 1
        while iu != iv:
            dist += 2.0 * self.edge_above(ju)
            iu //= self.delta
            iv //= self.delta
            ju += 1
        return dist


@dataclass
class NodeCounts:
    """Per-node subtree counts, stored level by level (index 0 = leaves).

    s_hat[j][i] is the number of servers in the subtree of node (j, i);
    r_hat likewise for requests; mu, when present, holds the expected number
    of requests per subtree.
    """

    topology: HstTopology
    s_hat: list[np.ndarray]
    r_hat: list[np.ndarray]
    mu: list[np.ndarray] | None = field(default=None)

    def s_at(self, node: NodeId) -> int:
        return int(self.s_hat[node.height][node.index])

    def r_at(self, node: NodeId) -> int:
        return int(self.r_hat[node.height][node.index])

    def mu_at(self, node: NodeId) -> float:
        if self.mu is None:
            raise ValueError("expected counts were not computed")
        return float(self.mu[node.height][node.index])


def _aggregate(topology: HstTopology, leaf_values: np.ndarray) -> list[np.ndarray]:
    levels = [leaf_values]
    for _ in range(topology.height):
        levels.append(levels[-1].reshape(-1, topology.delta).sum(axis=1))
    return levels


def subtree_counts(
    topology: HstTopology,
    server_leaves,
    request_leaves,
) -> NodeCounts:
    """Bottom-up server/request counts from leaf multisets (leaf indices)."""
    n_leaves = topology.num_leaves
    s0 = np.bincount(np.asarray(server_leaves, dtype=np.int64), minlength=n_leaves)
    r0 = np.bincount(np.asarray(request_leaves, dtype=np.int64), minlength=n_leaves)
    if s0.size > n_leaves or r0.size > n_leaves:
        raise ValueError("leaf index out of range for this topology")
    return NodeCounts(topology, _aggregate(topology, s0), _aggregate(topology, r0))


def expected_counts(topology: HstTopology, dists, emb) -> NodeCounts:
    """Expected request counts mu per subtree, exact for uniform/histogram
    distributions. ``emb`` supplies the leaf-cell geometry via leaf_masses."""
    if emb.topology != topology:
        raise ValueError("embedding does not match topology")
    mu0 = np.zeros(topology.num_leaves)
    for dist in dists:
        mu0 += emb.leaf_masses(dist)
    counts = subtree_counts(topology, [], [])
    counts.mu = _aggregate(topology, mu0)
    return counts
