"""Sample-based reduction from adversarial to stochastic servers.

Given one pooled (unlabeled) sample per request distribution, build an
offline proxy matching between the real servers and the samples, run the
inner algorithm against the samples, and forward each match through the
proxy. Per instance, the triangle inequality gives
cost(reduced) <= cost(inner on samples) + cost(proxy matching).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import ContractViolation
from .metric_core import euclid_dist
from .offline_opt import Matching, min_cost_matching


@dataclass
class ProxyMap:
    """Samples T (one per request distribution, unlabeled) and a min-cost
    perfect matching between the real servers S and T."""

    samples: np.ndarray
    matching: Matching

    @property
    def proxy_cost(self) -> float:
        return self.matching.total_cost

    def server_for_sample(self, t_index: int) -> int:
        return self.matching.request_to_server()[t_index]


def build_proxy(S, T, metric=None) -> ProxyMap:
    if len(S) != len(T):
        raise ValueError("need exactly one sample per server")
    return ProxyMap(np.asarray(T, dtype=float), min_cost_matching(S, T, metric))


class ReducedMatcher:
    """Adversarial-server algorithm built from an inner algorithm that runs
    against the sample pool."""

    def __init__(self, S, T, inner_factory, metric=None):
        self.servers = np.asarray(S, dtype=float)
        self.proxy = build_proxy(S, T, metric)
        self.inner = inner_factory(self.proxy.samples)
        self._sample_to_server = self.proxy.matching.request_to_server()
        self.metric = metric or euclid_dist
        self.inner_cost = 0.0

    def serve(self, request, rng) -> int:
        t_idx = self.inner.serve(request, rng)
        if t_idx not in self._sample_to_server:
            raise ContractViolation(f"inner returned unknown sample index {t_idx}")
        self.inner_cost += self.metric(self.proxy.samples[t_idx], request)
        return self._sample_to_server[t_idx]


def reduced_serve(proxy: ProxyMap, inner, request, rng, metric=None) -> int:
    """One step of the reduction: ask the inner algorithm (initialized with
    the sample pool) for a sample, return the proxied real server index."""
    t_idx = inner.serve(request, rng)
    if not 0 <= t_idx < len(proxy.samples):
        raise ContractViolation(f"inner returned unknown sample index {t_idx}")
    return proxy.server_for_sample(t_idx)
