"""Scenario runner: instance generation, cost/ratio estimation, scaling
fits, bound-verification suites, CSV reporting.

Each trial owns the stream (seed, trial-index), so trials are reproducible
independently of execution order.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, fields
from functools import partial

import numpy as np

from . import metric_core, offline_opt, online_algorithms
from .embedding import DyadicEmbedding, choose_height
from .hst import HstTopology, NodeId, subtree_counts
from .metric_core import SmoothDistribution, subcube_histogram
from .offline_opt import min_cost_matching
from .reduction import ReducedMatcher
from .rng import stream

SERVER_PRESETS = ("sampled_from_D", "uniform_grid", "corner_cluster", "single_point")
ALGORITHMS = ("rs_lifted", "greedy", "rs_reduced")
REQUEST_SPECS = ("identical", "heterogeneous")

# Histogram resolution per dimension for generated request suites; must stay
# a multiple of 2^h whenever expected counts are needed on these suites.
HIST_RESOLUTION = {1: 64, 2: 16, 3: 16}

CSV_COLUMNS = (
    "trial",
    "d",
    "n",
    "sigma",
    "algorithm",
    "server_preset",
    "h",
    "cost_alg",
    "cost_opt",
    "ratio",
    "proxy_cost",
    "seed",
)


class ConfigError(ValueError):
    """Scenario configuration failed validation."""


@dataclass
class ScenarioConfig:
    d: int
    n: int
    sigma: float
    request_spec: str = "identical"
    server_preset: str = "sampled_from_D"
    algorithm: str = "rs_lifted"
    height_variant: str | int = "rs"
    trials: int = 1
    seed: int = 0

    def validate(self) -> None:
        problems = []
        if self.d < 1:
            problems.append(f"d: must be >= 1, got {self.d}")
        if self.n < 1:
            problems.append(f"n: must be >= 1, got {self.n}")
        if not 0.0 < self.sigma <= 1.0:
            problems.append(f"sigma: must lie in (0, 1], got {self.sigma}")
        if self.request_spec not in REQUEST_SPECS:
            problems.append(f"request_spec: expected one of {REQUEST_SPECS}, got {self.request_spec!r}")
        if self.server_preset not in SERVER_PRESETS:
            problems.append(f"server_preset: expected one of {SERVER_PRESETS}, got {self.server_preset!r}")
        if self.algorithm not in ALGORITHMS:
            problems.append(f"algorithm: expected one of {ALGORITHMS}, got {self.algorithm!r}")
        if isinstance(self.height_variant, str):
            if self.height_variant not in ("rs", "bbgn"):
                problems.append(
                    f"height_variant: expected 'rs', 'bbgn' or an integer, got {self.height_variant!r}"
                )
        elif int(self.height_variant) < 1:
            problems.append(f"height_variant: explicit height must be >= 1, got {self.height_variant}")
        if self.trials < 1:
            problems.append(f"trials: must be >= 1, got {self.trials}")
        if self.seed < 0:
            problems.append(f"seed: must be >= 0, got {self.seed}")
        if problems:
            raise ConfigError("; ".join(problems))

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**obj)
        cfg.validate()
        return cfg


@dataclass
class ExperimentRecord:
    trial: int
    d: int
    n: int
    sigma: float
    algorithm: str
    server_preset: str
    h: int
    cost_alg: float
    cost_opt: float
    ratio: float
    proxy_cost: float
    seed: int
    stream_id: int = 0
    inner_cost: float = field(default=0.0)

    def csv_row(self) -> list[str]:
        out = []
        for name in CSV_COLUMNS:
            value = getattr(self, name)
            out.append(f"{value:.9g}" if isinstance(value, float) else str(value))
        return out


def make_distributions(cfg: ScenarioConfig, rng) -> list[SmoothDistribution]:
    g = HIST_RESOLUTION.get(cfg.d, 8)
    if cfg.sigma >= 1.0:
        return [SmoothDistribution.uniform(cfg.d)] * cfg.n
    if cfg.request_spec == "identical":
        shared = subcube_histogram(cfg.d, cfg.sigma, rng, resolution=g)
        return [shared] * cfg.n
    return [subcube_histogram(cfg.d, cfg.sigma, rng, resolution=g) for _ in range(cfg.n)]


def draw_one_each(dists, rng) -> np.ndarray:
    return np.stack([dist.sample(rng) for dist in dists])


def make_servers(cfg: ScenarioConfig, dists, rng) -> np.ndarray:
    if cfg.server_preset == "sampled_from_D":
        return draw_one_each(dists, rng)
    if cfg.server_preset == "uniform_grid":
        if cfg.d == 1:
            return ((np.arange(cfg.n) + 0.5) / cfg.n)[:, None]
        m = math.ceil(cfg.n ** (1.0 / cfg.d))
        axes = (np.arange(m) + 0.5) / m
        grid = np.stack(np.meshgrid(*([axes] * cfg.d), indexing="ij"), axis=-1)
        return grid.reshape(-1, cfg.d)[: cfg.n]
    if cfg.server_preset == "corner_cluster":
        return rng.random((cfg.n, cfg.d)) * 0.1
    if cfg.server_preset == "single_point":
        return np.zeros((cfg.n, cfg.d))
    raise ConfigError(f"unknown server preset {cfg.server_preset!r}")


def resolve_height(cfg: ScenarioConfig) -> int:
    if isinstance(cfg.height_variant, str):
        if cfg.n < 2:
            return 1
        return choose_height(cfg.n, cfg.d, cfg.height_variant)
    return int(cfg.height_variant)


def run_trial(cfg: ScenarioConfig, trial: int) -> ExperimentRecord:
    rng = stream(cfg.seed, trial)
    dists = make_distributions(cfg, rng)
    servers = make_servers(cfg, dists, rng)
    requests = draw_one_each(dists, rng)

    h = 0
    proxy_cost = 0.0
    inner_cost = 0.0
    if cfg.algorithm == "greedy":
        matcher = online_algorithms.GreedyMatcher(servers)
    elif cfg.algorithm == "rs_lifted":
        h = resolve_height(cfg)
        matcher = online_algorithms.lifted_rs_matcher(DyadicEmbedding(cfg.d, h), servers)
    elif cfg.algorithm == "rs_reduced":
        h = resolve_height(cfg)
        samples = draw_one_each(dists, rng)
        samples = samples[rng.permutation(cfg.n)]  # the pool is unlabeled
        emb = DyadicEmbedding(cfg.d, h)
        matcher = ReducedMatcher(
            servers, samples, partial(online_algorithms.lifted_rs_matcher, emb)
        )
        proxy_cost = matcher.proxy.proxy_cost
    else:
        raise ConfigError(f"unknown algorithm {cfg.algorithm!r}")

    _, costs = online_algorithms.run_online(lambda _s: matcher, servers, requests, rng)
    cost_alg = float(costs.sum())
    if cfg.algorithm == "rs_reduced":
        inner_cost = matcher.inner_cost
    cost_opt = min_cost_matching(servers, requests).total_cost
    if cost_opt > 0.0:
        ratio = cost_alg / cost_opt
    else:
        ratio = 1.0 if cost_alg <= 1e-12 else math.inf
    return ExperimentRecord(
        trial=trial,
        d=cfg.d,
        n=cfg.n,
        sigma=cfg.sigma,
        algorithm=cfg.algorithm,
        server_preset=cfg.server_preset,
        h=h,
        cost_alg=cost_alg,
        cost_opt=cost_opt,
        ratio=ratio,
        proxy_cost=proxy_cost,
        seed=cfg.seed,
        stream_id=trial,
        inner_cost=inner_cost,
    )


def run_scenario(cfg: ScenarioConfig) -> list[ExperimentRecord]:
    cfg.validate()
    return [run_trial(cfg, t) for t in range(cfg.trials)]


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow(rec.csv_row())


def ratio_summary(records) -> tuple[float, float]:
    """Both aggregate ratios: mean(cost)/mean(OPT) — the competitive-ratio
    definition, used by acceptance — and mean(cost/OPT)."""
    costs = np.array([rec.cost_alg for rec in records])
    opts = np.array([rec.cost_opt for rec in records])
    return float(costs.mean() / opts.mean()), float(np.mean(costs / opts))


@dataclass
class ScalingFit:
    slope: float
    intercept: float
    stderr: float


def fit_scaling(records, value=lambda rec: rec.cost_alg) -> ScalingFit:
    """Least-squares fit of log2(mean value) against log2(n) over the
    distinct instance sizes present in the records."""
    groups: dict[int, list[float]] = {}
    for rec in records:
        groups.setdefault(rec.n, []).append(value(rec))
    if len(groups) < 3:
        raise ValueError("need at least 3 distinct n values")
    ns = sorted(groups)
    means = np.array([np.mean(groups[n]) for n in ns])
    if (means <= 0.0).any():
        raise ValueError("degenerate (zero) costs cannot be fit on a log scale")
    x = np.log2(np.array(ns, dtype=float))
    y = np.log2(means)
    m = x.size
    xbar, ybar = x.mean(), y.mean()
    sxx = float(((x - xbar) ** 2).sum())
    slope = float(((x - xbar) * (y - ybar)).sum() / sxx)
    intercept = ybar - slope * xbar
    resid = y - (slope * x + intercept)
    var = float((resid**2).sum() / (m - 2)) if m > 2 else 0.0
    return ScalingFit(slope, float(intercept), math.sqrt(var / sxx))


# ---------------------------------------------------------------------------
# Verification suites
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    instances: int
    margin: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.instances} instances, margin {self.margin:.3e}"


def _prob_grid(n: int):
    import itertools

    levels = [0.0, 0.25, 0.5, 0.75, 1.0]
    return [np.array(v) for v in itertools.product(levels, repeat=n)]


def verify_pb(seed: int = 0) -> list[CheckResult]:
    """Exhaustive checks of the convex-order, mean-absolute-deviation and
    binomial anti-concentration facts on small probability grids."""
    tol = metric_core.EXACT_TOL
    results = []

    convex_margin = math.inf
    mad_margin = math.inf
    norm_margin = math.inf
    std_margin = math.inf
    pairs = 0
    for n in (1, 2, 3):
        grid = _prob_grid(n)
        pmfs = [metric_core.poisson_binomial_pmf(p) for p in grid]
        for pmf in pmfs:
            norm_margin = min(norm_margin, tol - abs(pmf.sum() - 1.0), float(pmf.min()) + tol)
        for p, pmf in zip(grid, pmfs):
            std_margin = min(std_margin, math.sqrt(p.sum()) + tol - metric_core.pmf_std(pmf))
        centers = np.arange(0, 2 * n + 1) / 2.0
        support = np.arange(n + 1)
        for ip, p in enumerate(grid):
            for iq, q in enumerate(grid):
                if ip == iq or not metric_core.majorizes(p, q):
                    continue
                pairs += 1
                for c in centers:
                    for f in (np.abs(support - c), (support - c) ** 2):
                        gap = float(pmfs[iq] @ f) - float(pmfs[ip] @ f)
                        convex_margin = min(convex_margin, gap + tol)
                gap = metric_core.mean_abs_dev(pmfs[iq], q.sum()) - metric_core.mean_abs_dev(
                    pmfs[ip], p.sum()
                )
                mad_margin = min(mad_margin, gap + tol)
    results.append(CheckResult("pb.pmf_normalization", sum(5**n for n in (1, 2, 3)), norm_margin, norm_margin >= 0))
    results.append(CheckResult("pb.std_upper_bound", sum(5**n for n in (1, 2, 3)), std_margin, std_margin >= 0))
    results.append(CheckResult("pb.convex_order", pairs, convex_margin, convex_margin >= 0))
    results.append(CheckResult("pb.mean_abs_dev_order", pairs, mad_margin, mad_margin >= 0))

    count = 0
    ok = True
    for n in range(2, 21):
        for p in (1.0 / n, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0 - 1.0 / n):
            if not (1.0 / n - tol <= p <= 1.0 - 1.0 / n + tol):
                continue
            count += 1
            ok = ok and metric_core.binomial_mad_bound_check(n, p)
    results.append(CheckResult("pb.binomial_mad_lower_bound", count, 0.0 if ok else -1.0, ok))

    rng = stream(seed, 901)
    freq_margin = math.inf
    for g in (8, 16):
        masses = rng.random(g)
        masses /= masses.sum()
        sigma = 1.0 / (masses.max() * g)
        dist = SmoothDistribution.histogram(masses, sigma=min(sigma, 1.0), d=1)
        draws = dist.sample(rng, size=100_000)
        counts = np.bincount(np.minimum((draws[:, 0] * g).astype(int), g - 1), minlength=g)
        phat = counts / draws.shape[0]
        se = np.sqrt(masses * (1 - masses) / draws.shape[0])
        freq_margin = min(freq_margin, float((3 * se - np.abs(phat - masses)).min()))
    results.append(CheckResult("pb.histogram_sampler_frequencies", 2, freq_margin, freq_margin >= 0))
    return results


def verify_opt(seed: int = 0) -> list[CheckResult]:
    """Tree closed form vs assignment solver, line identity, obstacle and
    window-mass inequalities."""
    results = []
    rng = stream(seed, 902)

    worst = -math.inf
    for _ in range(200):
        h = int(rng.integers(1, 4))
        topo = HstTopology(delta=2, alpha=2.0, height=h)
        n = int(rng.integers(1, 9))
        s_leaves = rng.integers(0, topo.num_leaves, size=n)
        r_leaves = rng.integers(0, topo.num_leaves, size=n)
        closed = offline_opt.hst_opt_cost(topo, subtree_counts(topo, s_leaves, r_leaves))
        solved = min_cost_matching(
            s_leaves, r_leaves, metric=lambda a, b, t=topo: t.leaf_distance(t.lca_height_leaves(int(a), int(b)))
        ).total_cost
        worst = max(worst, abs(closed - solved))
    results.append(CheckResult("opt.tree_closed_form_equals_solver", 200, 1e-9 - worst, worst <= 1e-9))

    worst = -math.inf
    for _ in range(200):
        n = int(rng.integers(1, 65))
        S = rng.random(n)
        R = rng.random(n)
        gap = abs(min_cost_matching(S, R).total_cost - offline_opt.sorted_matching_cost_1d(S, R))
        worst = max(worst, gap)
    results.append(CheckResult("opt.line_sorted_identity", 200, 1e-9 - worst, worst <= 1e-9))

    worst = -math.inf
    for _ in range(200):
        n = int(rng.integers(1, 129))
        S = rng.random(n)
        R = rng.random(n)
        L = float(rng.uniform(0.05, 0.9))
        obstacle = offline_opt.obstacle_integral_d1(S, R, L)
        opt = min_cost_matching(S, R).total_cost
        worst = max(worst, obstacle - 2.0 * opt)
    results.append(CheckResult("opt.obstacle_at_most_twice_opt", 200, 1e-9 - worst, worst <= 1e-9))

    margin = math.inf
    for _ in range(50):
        sigma = float(rng.uniform(0.1, 1.0))
        n = int(rng.integers(4, 40))
        dists = [subcube_histogram(1, sigma, rng, resolution=64) for _ in range(n)]
        L = sigma / 4.0
        margin = min(margin, offline_opt.window_mass_integral(dists, L) - L * n / 2.0)
    results.append(CheckResult("opt.window_mass_at_least_Ln_over_2", 50, margin, margin >= -1e-9))
    return results


def verify_rs(seed: int = 0, instances: int = 50, runs: int = 2000) -> list[CheckResult]:
    """Empirical-mean checks of the per-instance RS bound and of the uniform
    child choice."""
    results = []
    rng = stream(seed, 903)
    worst = -math.inf
    for _ in range(instances):
        h = int(rng.integers(1, 4))
        topo = HstTopology(delta=2, alpha=2.0, height=h)
        n = int(rng.integers(1, 17))
        s_leaves = rng.integers(0, topo.num_leaves, size=n)
        r_leaves = rng.integers(0, topo.num_leaves, size=n)
        bound = online_algorithms.rs_instance_bound(topo, subtree_counts(topo, s_leaves, r_leaves))
        costs = np.empty(runs)
        for k in range(runs):
            _, per_req = online_algorithms.run_online(
                lambda leaves, t=topo: online_algorithms.RandomSubtreeMatcher(t, leaves),
                s_leaves,
                r_leaves,
                rng,
            )
            costs[k] = per_req.sum()
        se = costs.std(ddof=1) / math.sqrt(runs)
        worst = max(worst, costs.mean() - (bound + 3.0 * se))
    slack = -worst if worst != 0 else 0.0
    results.append(CheckResult("rs.per_instance_bound", instances, slack, worst <= 0))

    topo = HstTopology(delta=2, alpha=2.0, height=2)
    hits = 0
    trials = 2000
    for k in range(trials):
        state = online_algorithms.make_state(topo, [2, 3])
        leaf = online_algorithms._rs_serve_index(state, 0, stream(seed, 10_000 + k))
        hits += leaf == 2
    freq = hits / trials
    results.append(
        CheckResult("rs.uniform_child_choice", trials, 0.05 - abs(freq - 0.5), abs(freq - 0.5) <= 0.05)
    )
    return results


def verify_embedding(seed: int = 0) -> list[CheckResult]:
    """Laminarity, the pointwise non-contraction inequality, and consistency
    of the point-to-leaf map across levels."""
    results = []
    rng = stream(seed, 904)

    laminar_ok = True
    checked = 0
    for d, h in ((1, 3), (2, 3)):
        cubes = []
        for level in range(h + 1):
            side = 2 ** (h - level)
            step = 2.0**-(h - level)
            for cell in np.ndindex(*(side,) * d):
                lo = np.array(cell) * step
                cubes.append((lo, lo + step))
        for i in range(len(cubes)):
            for j in range(i + 1, len(cubes)):
                lo1, hi1 = cubes[i]
                lo2, hi2 = cubes[j]
                inter = (np.maximum(lo1, lo2) < np.minimum(hi1, hi2)).all()
                nested = ((lo1 <= lo2).all() and (hi2 <= hi1).all()) or (
                    (lo2 <= lo1).all() and (hi1 <= hi2).all()
                )
                checked += 1
                if inter and not nested:
                    laminar_ok = False
    results.append(CheckResult("embedding.laminar_family", checked, 0.0 if laminar_ok else -1.0, laminar_ok))

    worst = -math.inf
    pairs = 0
    for d in (1, 2, 3):
        for h in range(2, 7):
            emb = DyadicEmbedding(d, h)
            topo = emb.topology
            dist_table = topo.leaf_distance_table()
            s = rng.random((10_000, d))
            r = rng.random((10_000, d))
            ls = emb.leaf_index_of(s)
            lr = emb.leaf_index_of(r)
            euclid = np.sqrt(((s - r) ** 2).sum(axis=1))
            ks = np.array([topo.lca_height_leaves(int(a), int(b)) for a, b in zip(ls, lr)])
            bound = math.sqrt(d) * (dist_table[ks] / 4.0 + 2.0**-h)
            worst = max(worst, float((euclid - bound).max()))
            pairs += 10_000
    results.append(CheckResult("embedding.non_contraction", pairs, 1e-9 - worst, worst <= 1e-9))

    ok = True
    for d in (1, 2):
        emb = DyadicEmbedding(d, 4)
        pts = rng.random((200, d))
        leaves = emb.leaf_index_of(pts)
        for j in range(1, 5):
            coarse = DyadicEmbedding(d, 4 - j) if 4 - j >= 1 else None
            for p, leaf in zip(pts, leaves):
                anc = emb.topology.ancestor(NodeId(0, int(leaf)), j)
                if coarse is not None:
                    ok = ok and coarse.leaf_index_of(p[None, :])[0] == anc.index
    results.append(CheckResult("embedding.leaf_map_level_consistency", 400, 0.0 if ok else -1.0, ok))
    return results


def verify_reduction(seed: int = 0, trials: int = 100) -> list[CheckResult]:
    """Per-trial decomposition cost(reduced) <= cost(inner) + proxy cost."""
    rng = stream(seed, 905)
    worst = -math.inf
    for k in range(trials):
        d = 1 + k % 3
        n = int(rng.integers(2, 33))
        cfg = ScenarioConfig(d=d, n=n, sigma=1.0, algorithm="rs_reduced", trials=1, seed=seed + k)
        rec = run_trial(cfg, 0)
        worst = max(worst, rec.cost_alg - (rec.inner_cost + rec.proxy_cost))
    return [CheckResult("reduction.cost_decomposition", trials, 1e-9 - worst, worst <= 1e-9)]


SUITES = {
    "pb": verify_pb,
    "opt": verify_opt,
    "rs": verify_rs,
    "embedding": verify_embedding,
    "reduction": verify_reduction,
}


def verify_bounds(suite: str, seed: int = 0) -> list[CheckResult]:
    if suite == "all":
        out = []
        for name in SUITES:
            out.extend(SUITES[name](seed))
        return out
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {sorted(SUITES)} or 'all'")
    return SUITES[suite](seed)
