"""Hard instances and lower-bound checkers.

Each construction comes with an evaluator that scores a concrete algorithm
(or a whole family of deterministic strategies) on it, so a claimed lower
bound can be compared against what the strategies actually achieve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .offline import optimal_bottleneck_runs
from .online import OnlineRun, fixed_cuts_bottleneck, guarded_ceil
from .seqcore import SequenceError, WeightedSequence

MAX_EXP_TERMS = 62


# ---------------------------------------------------------------------------
# Non-preemptive family


@dataclass(frozen=True)
class FamilyMember:
    index: int
    seq: WeightedSequence
    p: int

    @property
    def optimum(self) -> int:
        return -(-self.seq.n // self.p)


def nonpreemptive_family(p: int) -> list[FamilyMember]:
    """All-ones sequences of lengths ``4 i p`` for ``i = 1..p^2`` (kept symbolic)."""
    if p < 2:
        raise ValueError("p must be >= 2")
    return [FamilyMember(i, WeightedSequence.ones(4 * i * p), p) for i in range(1, p * p + 1)]


def family_mean_ratio(p: int, cuts: Sequence[int]) -> float:
    """Mean ratio of a fixed separator set (cut after these requests) over the family."""
    total = 0.0
    k = p * p
    for i in range(1, k + 1):
        n = 4 * i * p
        total += fixed_cuts_bottleneck(n, cuts, p) / (4 * i)
    return total / k


def quota_cuts(p: int, q: int) -> tuple[int, ...]:
    """Cuts of the equal-quota policy on all-ones input: after q, 2q, ..., (p-1)q."""
    return tuple(q * k for k in range(1, p))


def geometric_cuts(p: int, first: float, ratio: float, limit: int) -> tuple[int, ...]:
    out: list[int] = []
    v = first
    while len(out) < p - 1:
        c = int(round(v))
        if c > limit:
            break
        if not out or c > out[-1]:
            out.append(c)
        v *= ratio
    return tuple(out)


def local_search_cuts(p: int, start: Sequence[int], limit: int, rounds: int = 40) -> tuple[tuple[int, ...], float]:
    """Coordinate descent on the family mean ratio over integer cut positions."""
    cur = sorted(start)
    best = family_mean_ratio(p, cur)
    step = max(1, limit // 8)
    for _ in range(rounds):
        improved = False
        for k in range(len(cur)):
            for delta in (-step, step):
                cand = cur.copy()
                cand[k] = min(max(1, cand[k] + delta), limit)
                cand = sorted(set(cand))
                val = family_mean_ratio(p, cand)
                if val < best - 1e-12:
                    cur, best, improved = cand, val, True
        if not improved:
            if step == 1:
                break
            step = max(1, step // 2)
    return tuple(cur), best


@dataclass
class PolicySweep:
    p: int
    bound: float
    results: dict[str, float] = field(default_factory=dict)

    @property
    def best(self) -> tuple[str, float]:
        name = min(self.results, key=self.results.get)
        return name, self.results[name]


def nonpreemptive_sweep(p: int, seed: int = 0, random_sets: int = 200) -> PolicySweep:
    """Score never-place, every equal quota, geometric, random and locally optimized cut sets."""
    limit = 4 * p * p * p
    out = PolicySweep(p, p / 2 - 0.5)
    out.results["never"] = family_mean_ratio(p, ())
    best_q, best_qv = 1, math.inf
    for q in range(1, limit + 1):
        v = family_mean_ratio(p, quota_cuts(p, q))
        if v < best_qv:
            best_q, best_qv = q, v
    out.results[f"quota(q={best_q})"] = best_qv
    best_geo, best_gv = (), math.inf
    for first in np.geomspace(2, limit, 24):
        for ratio in np.linspace(1.2, 4.0, 15):
            cuts = geometric_cuts(p, float(first), float(ratio), limit)
            v = family_mean_ratio(p, cuts)
            if v < best_gv:
                best_geo, best_gv = cuts, v
    out.results["geometric"] = best_gv
    rng = np.random.default_rng(seed)
    best_rand, best_rv = (), math.inf
    for _ in range(random_sets):
        cuts = tuple(sorted(set(int(c) for c in rng.integers(1, limit + 1, size=p - 1))))
        v = family_mean_ratio(p, cuts)
        if v < best_rv:
            best_rand, best_rv = cuts, v
    out.results["random"] = best_rv
    start = min((best_geo, best_rand, quota_cuts(p, best_q)), key=lambda c: family_mean_ratio(p, c))
    _, v = local_search_cuts(p, start, limit)
    out.results["local-search"] = v
    return out


# ---------------------------------------------------------------------------
# Harmonic length distribution


class HarmonicDistribution:
    """Lengths ``n`` in ``[n_min, n_max]`` with ``P[n]`` proportional to ``1/n``."""

    def __init__(self, n_min: int, n_max: int):
        if n_min < 1 or n_max <= 2 * n_min:
            raise ValueError("need 1 <= n_min and n_max > 2 * n_min")
        self.n_min = n_min
        self.n_max = n_max
        self.support = np.arange(n_min, n_max + 1, dtype=np.int64)
        w = 1.0 / self.support
        self.pmf = w / math.fsum(w)
        self.cdf = np.cumsum(self.pmf)
        self.cdf[-1] = 1.0

    def sample(self, size: int | None = None, rng: np.random.Generator | int | None = None):
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        u = rng.random(size)
        idx = np.searchsorted(self.cdf, u, side="right")
        idx = np.minimum(idx, len(self.support) - 1)
        out = self.support[idx]
        return int(out) if size is None else out

    def expectation(self, values: np.ndarray) -> float:
        return float(np.dot(self.pmf, values))


def harmonic_distribution(n_min: int, n_max: int, seed: int | None = None) -> int:
    """One length drawn with probability proportional to ``1/n``."""
    return HarmonicDistribution(n_min, n_max).sample(rng=seed)


def center_ratios(x: float, delta: float, ns: np.ndarray) -> np.ndarray:
    """Ratio of center guessing with fixed delta on all-ones inputs of each length."""
    ts = []
    i = 0
    top = int(ns.max())
    while True:
        t = guarded_ceil(x ** (i + delta))
        if t > top:
            break
        ts.append(t)
        i += 1
    ts_arr = np.array([0] + ts, dtype=np.int64)
    last = ts_arr[np.searchsorted(ts_arr, ns, side="right") - 1]
    bott = np.where(last > 0, np.maximum(last, ns - last), ns)
    return bott / ((ns + 1) // 2)


@dataclass
class CenterLowerBound:
    x: float
    deltas: np.ndarray
    expectations: np.ndarray

    @property
    def best(self) -> float:
        return float(self.expectations.min())


def center_lower_bound(
    n_min: int = 10**4, n_max: int = 10**6, x: float = 3.052, grid: int = 64
) -> CenterLowerBound:
    """Exact expected ratio of each fixed-delta center guesser under the harmonic lengths."""
    dist = HarmonicDistribution(n_min, n_max)
    deltas = (np.arange(grid) + 0.5) / grid
    exps = np.array([dist.expectation(center_ratios(x, float(d), dist.support)) for d in deltas])
    return CenterLowerBound(x, deltas, exps)


# ---------------------------------------------------------------------------
# Exponential family


def exponential_family(i: int) -> WeightedSequence:
    """``1, 2, 4, ..., 2^(i-1)``."""
    if i < 1:
        raise ValueError("length must be >= 1")
    if i > MAX_EXP_TERMS:
        raise SequenceError(f"more than {MAX_EXP_TERMS} terms overflow 64-bit weights")
    return WeightedSequence(1 << k for k in range(i))


def exp_cut_ratio(n: int, j: int) -> float:
    """Ratio on ``S_n`` with the separator after request ``j`` (``j = 0``: no separator)."""
    left = 2.0 ** (j - n + 1) - 2.0 ** (1 - n)
    right = 2.0 - 2.0 ** (j - n + 1)
    return max(left, right)


@dataclass
class ExpFamilyResult:
    x_min: int
    x_max: int
    cuts: tuple[int, ...]
    mean_ratio: float


def exp_family_best_fixed(x_min: int, x_max: int) -> ExpFamilyResult:
    """Best separator set (cuts after requests) for the uniform distribution on ``S_i``, ``i`` in range.

    The final separator on ``S_n`` sits after the largest chosen request ``<= n``,
    so a dynamic program over the last chosen request is exact.
    """
    if not 1 <= x_min <= x_max <= MAX_EXP_TERMS:
        raise ValueError("need 1 <= x_min <= x_max <= 62")
    ns = range(x_min, x_max + 1)
    # cost[j][n]: ratio on S_n when the last separator is after request j
    # best[j]: minimal summed ratio over n >= j given a separator after j
    cand = list(range(0, x_max + 1))
    best: dict[int, float] = {}
    nxt: dict[int, int | None] = {}
    for j in reversed(cand):
        # keep j until some later k > j (or forever)
        opts = []
        acc = 0.0
        for k in range(j + 1, x_max + 2):
            # n in [max(j, x_min), k - 1] see separator j
            n = k - 1
            if n >= x_min and n >= j:
                acc += exp_cut_ratio(n, j)
            if k <= x_max:
                opts.append((acc + best[k], k))
            else:
                opts.append((acc, None))
        v, k = min(opts)
        best[j], nxt[j] = v, k
    # the empty-prefix state behaves like "after request 0"
    cuts = []
    j = nxt[0]
    while j is not None:
        cuts.append(j)
        j = nxt[j]
    return ExpFamilyResult(x_min, x_max, tuple(cuts), best[0] / len(ns))


def exp_family_mean(x_min: int, x_max: int, cuts: Iterable[int]) -> float:
    cs = sorted(cuts)
    total = 0.0
    for n in range(x_min, x_max + 1):
        j = max((c for c in cs if c <= n), default=0)
        total += exp_cut_ratio(n, j)
    return total / (x_max - x_min + 1)


# ---------------------------------------------------------------------------
# Two-length distribution


SIGMA_WEIGHTS = (0.4, 0.6)


def sigma_pair(p: int) -> tuple[WeightedSequence, WeightedSequence, tuple[float, float]]:
    """All-ones sequences of lengths ``2p`` and ``2p + 1`` and their mixing weights."""
    if p < 2:
        raise ValueError("p must be >= 2")
    return WeightedSequence.ones(2 * p), WeightedSequence.ones(2 * p + 1), SIGMA_WEIGHTS


def sigma_expected_ratio(run: Callable[[WeightedSequence, int], OnlineRun], p: int) -> tuple[float, float, float]:
    """(ratio on the short one, ratio on the long one, mixture expectation)."""
    s1, s2, (w1, w2) = sigma_pair(p)
    r1 = run(s1, p).ratio
    r2 = run(s2, p).ratio
    return r1, r2, w1 * r1 + w2 * r2


# ---------------------------------------------------------------------------
# Flow lower bound


FLOW_RESOLUTION = 10**6


@dataclass
class FlowLBResult:
    alpha: float
    x_max: int  # scaled heaviest weight
    light: int  # |L|
    extra: int  # appended unit requests
    forced: float  # 2 x_max / alpha in scaled units
    optimum: int
    passed: bool
    counterexample: list[int] | None = None


def implied_flow_bound(alpha: float) -> float:
    """Ratio every deterministic Flow algorithm must suffer for a given split parameter."""
    return (5.0 - alpha - 2.0 / alpha) / 2.0


def _probe_parts_runs(runs: Sequence[tuple[int, int]], bound: int) -> list[int]:
    """Partition weights of the greedy sweep over (value, repeat) runs."""
    parts: list[int] = []
    cur = 0
    for v, c in runs:
        while c:
            take = min(c, (bound - cur) // v)
            if take == 0:
                parts.append(cur)
                cur = 0
                continue
            cur += take * v
            c -= take
    parts.append(cur)
    return parts


def flow_lb_check(weights: Sequence[float], alpha: float = math.sqrt(2.0)) -> FlowLBResult:
    """Confirm that appending ``(|L|+1) * 2 x_max / alpha`` unit requests forces a heavy partition.

    The state has ``len(weights)`` partitions.  Weights are scaled so the
    maximum becomes 10^6 and rounded to integers.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (1, 2)")
    ws = np.asarray(weights, dtype=float)
    if ws.size == 0 or np.any(ws <= 0):
        raise ValueError("weights must be positive")
    scaled = np.maximum(1, np.rint(ws * (FLOW_RESOLUTION / ws.max()))).astype(np.int64)
    x_max = int(scaled.max())
    light = int(np.count_nonzero(scaled < x_max / alpha))
    forced = 2.0 * x_max / alpha
    extra = (light + 1) * math.ceil(forced)
    runs = [(int(v), 1) for v in scaled] + [(1, extra)]
    opt = optimal_bottleneck_runs(runs, len(scaled))
    passed = opt >= forced
    ce = None if passed else _probe_parts_runs(runs, opt)
    return FlowLBResult(alpha, x_max, light, extra, forced, opt, passed, ce)
