"""Preemptive online algorithms for Part.

Every algorithm drives a :class:`PreemptiveEngine`, which turns the desired
separator set after each request into remove/insert events.  The resulting
log is accepted by :func:`seqpart.seqcore.validate_event_stream`.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .offline import optimal_bottleneck
from .seqcore import (
    OnlineEvent,
    PartitionLayout,
    WeightedSequence,
    locate,
)

LN2 = math.log(2.0)
X_UNWEIGHTED = 3.052
X_WEIGHTED = 5.357
GUARD_RTOL = 1e-9


class UnsupportedInput(ValueError):
    """Algorithm called on an input class it is not defined for."""


class InvariantViolation(RuntimeError):
    """An internal guarantee of an algorithm failed."""


@dataclass
class OnlineRun:
    algorithm: str
    p: int
    seed: int | None
    events: list[OnlineEvent] | None
    layout: PartitionLayout
    bottleneck: int
    optimum: int
    info: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        if self.optimum == 0:
            return 1.0
        return self.bottleneck / self.optimum


class PreemptiveEngine:
    """Tracks live separators and logs the events that realize each change."""

    def __init__(self, p: int, record: bool = True):
        self.p = p
        self.j = 0
        self.live: Counter[int] = Counter()
        self.events: list[OnlineEvent] | None = [] if record else None

    def observe(self, weight: int) -> None:
        self.j += 1
        if self.events is not None:
            self.events.append(OnlineEvent.observe(weight))

    def commit(self, separators: Iterable[int]) -> None:
        """Move to ``separators``: removals first, then insertions."""
        want = Counter(separators)
        drop = self.live - want
        add = want - self.live
        if not drop and not add:
            return
        for pos in add:
            if pos not in (self.j, self.j + 1):
                raise InvariantViolation(f"insert at {pos} while at request {self.j}")
        if self.events is not None:
            for pos in sorted(drop.elements()):
                self.events.append(OnlineEvent.remove(pos))
            for pos in sorted(add.elements()):
                self.events.append(OnlineEvent.insert(pos))
        self.live = want

    def layout(self) -> PartitionLayout:
        return PartitionLayout(self.p, tuple(self.live.elements()))


def _finish(name, seq, p, engine, seed=None, info=None, optimum=None) -> OnlineRun:
    layout = engine.layout()
    weights = layout.partition_weights(seq)
    if optimum is None:
        optimum = optimal_bottleneck(seq, p)
    return OnlineRun(
        algorithm=name,
        p=p,
        seed=seed,
        events=engine.events,
        layout=layout,
        bottleneck=max(weights),
        optimum=optimum,
        info=info or {},
    )


# ---------------------------------------------------------------------------
# p = 2: guessing the center


@dataclass(frozen=True)
class GuessCenterConfig:
    x: float = X_UNWEIGHTED
    delta: float | None = None  # None draws a uniform delta from the seed
    weighted: bool = False

    def __post_init__(self):
        if not self.x > 2:
            raise ValueError(f"growth base must exceed 2, got {self.x}")
        if self.delta is not None and not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


def guarded_ceil(v: float) -> int:
    """Ceiling that first snaps values within 1e-9 (relative) of an integer."""
    r = round(v)
    if abs(v - r) <= GUARD_RTOL * max(1.0, abs(v)):
        return int(r)
    return math.ceil(v)


def draw_delta(seed: int | np.random.Generator | None) -> float:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    while True:
        d = float(rng.random())
        if d > 0.0:
            return d


def thresholds(x: float, delta: float, limit: int) -> list[int]:
    """All unit thresholds ``ceil(x^(i + delta)) <= limit`` for i = 0, 1, ..."""
    out = []
    i = 0
    while True:
        t = guarded_ceil(x ** (i + delta))
        if t > limit:
            return out
        out.append(t)
        i += 1


def last_threshold(x: float, delta: float, limit: int) -> int:
    """Largest threshold not exceeding ``limit`` (0 if there is none), in O(1)."""
    if limit < 1:
        return 0
    i = max(0, int(math.floor(math.log(limit) / math.log(x) - delta)) - 1)
    best = 0
    for k in range(i, i + 3):
        t = guarded_ceil(x ** (k + delta))
        if t <= limit:
            best = t
    if best == 0 and i > 0:
        return last_threshold_scan(x, delta, limit)
    return best


def last_threshold_scan(x: float, delta: float, limit: int) -> int:
    ts = thresholds(x, delta, limit)
    return ts[-1] if ts else 0


def guess_center(
    seq: WeightedSequence,
    cfg: GuessCenterConfig = GuessCenterConfig(),
    seed: int | None = None,
    record: bool = True,
) -> OnlineRun:
    """Randomized geometric center guessing for p = 2.

    The input is read as ``W_n`` unit requests; whenever the unit count reaches
    ``ceil(x^(i + delta))`` the single separator moves right after the request
    holding that unit.
    """
    if not cfg.weighted and not seq.is_ones:
        raise UnsupportedInput("unweighted center guessing needs an all-ones sequence")
    delta = cfg.delta if cfg.delta is not None else draw_delta(seed)
    engine = PreemptiveEngine(2, record)
    x = cfg.x
    i = 0
    nxt = guarded_ceil(x ** delta)
    units = 0
    moves = 0
    for w in seq:
        engine.observe(w)
        units += w
        if nxt <= units:
            while nxt <= units:
                i += 1
                nxt = guarded_ceil(x ** (i + delta))
            engine.commit([engine.j + 1])
            moves += 1
    name = "ax-weighted" if cfg.weighted else "ax"
    return _finish(name, seq, 2, engine, seed, {"x": x, "delta": delta, "moves": moves})


def guess_center_bottleneck(prefix: Sequence[int], x: float, delta: float) -> int:
    """Final bottleneck of center guessing from prefix sums, without simulating."""
    total = prefix[-1]
    t = last_threshold(x, delta, total)
    if t == 0:
        return total
    k = locate(prefix, t)
    left = prefix[k]
    return max(left, total - left)


# ---------------------------------------------------------------------------
# Barely random (one coin)


def barely_random(
    seq: WeightedSequence, seed: int | None = None, coin: int | None = None, record: bool = True
) -> OnlineRun:
    """Move the separator at requests ``2^i`` for i of one random parity."""
    if not seq.is_ones:
        raise UnsupportedInput("the one-bit algorithm is defined for all-ones sequences")
    if coin is None:
        coin = int(np.random.default_rng(seed).integers(2))
    if coin not in (0, 1):
        raise ValueError("coin must be 0 or 1")
    engine = PreemptiveEngine(2, record)
    nxt = 1 << coin
    for w in seq:
        engine.observe(w)
        if engine.j == nxt:
            engine.commit([engine.j + 1])
            nxt <<= 2
    return _finish("a0", seq, 2, engine, seed, {"coin": coin})


def barely_random_bottleneck(n: int, coin: int) -> int:
    pos = 0
    k = 1 << coin
    while k <= n:
        pos = k
        k <<= 2
    return max(pos, n - pos) if pos else n


# ---------------------------------------------------------------------------
# General p: deterministic 2-competitive algorithm


def greedy_two_approx(
    seq: WeightedSequence,
    p: int,
    record: bool = True,
    check: bool = True,
    observer: Callable[[int, list[int]], None] | None = None,
) -> OnlineRun:
    """Re-probe the current partitions plus the new request after every request.

    The bound is ``2 * max(m, S / p)``; a group of weight ``g`` fits iff
    ``g * p <= 2 * max(m * p, S)``, which keeps the comparison in integers.
    ``observer(j, weights)`` is called with the partition weights after each request.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    engine = PreemptiveEngine(p, record)
    weights: list[int] = []
    starts: list[int] = []
    total = 0
    biggest = 0
    worst_step = 0.0
    for x in seq:
        engine.observe(x)
        j = engine.j
        total += x
        if x > biggest:
            biggest = x
        cap = 2 * max(biggest * p, total)
        new_w: list[int] = []
        new_s: list[int] = []
        cur = -1
        for w, s in zip(weights + [x], starts + [j]):
            if cur >= 0 and (cur + w) * p <= cap:
                cur += w
            else:
                if cur >= 0:
                    new_w.append(cur)
                cur = w
                new_s.append(s)
        new_w.append(cur)
        if len(new_w) > p:
            raise InvariantViolation(f"probe made {len(new_w)} > {p} partitions at request {j}")
        if check:
            top = max(new_w)
            if top * p > cap:
                raise InvariantViolation(f"bottleneck {top} above 2*max(m, S/p) at request {j}")
            worst_step = max(worst_step, top * p / cap * 2)
        weights, starts = new_w, new_s
        engine.commit(starts[1:])
        if observer is not None:
            observer(j, list(weights))
    info = {"step_ratio_to_lb": worst_step}
    return _finish("greedy2", seq, p, engine, info=info)


# ---------------------------------------------------------------------------
# Non-preemptive baselines


@dataclass(frozen=True)
class NonPreemptivePolicy:
    kind: Literal["never", "quota", "fixed"] = "never"
    quota: int = 0
    cuts: tuple[int, ...] = ()  # place after these requests (fixed policy)

    @classmethod
    def never(cls) -> "NonPreemptivePolicy":
        return cls("never")

    @classmethod
    def equal_quota(cls, q: int) -> "NonPreemptivePolicy":
        if q < 1:
            raise ValueError("quota must be >= 1")
        return cls("quota", quota=q)

    @classmethod
    def fixed(cls, cuts: Iterable[int]) -> "NonPreemptivePolicy":
        return cls("fixed", cuts=tuple(sorted(set(cuts))))


def nonpreemptive_baseline(
    seq: WeightedSequence, p: int, policy: NonPreemptivePolicy, record: bool = True
) -> OnlineRun:
    """A run that never removes a separator."""
    engine = PreemptiveEngine(p, record)
    placed: list[int] = []
    units = 0
    next_mark = policy.quota
    cuts = set(policy.cuts)
    for w in seq:
        engine.observe(w)
        units += w
        cut = False
        if policy.kind == "quota" and units >= next_mark:
            cut = True
            next_mark = (units // policy.quota + 1) * policy.quota
        elif policy.kind == "fixed" and engine.j in cuts:
            cut = True
        if cut and len(placed) < p - 1:
            placed.append(engine.j + 1)
            engine.commit(placed)
    return _finish(f"nonpre-{policy.kind}", seq, p, engine)


def fixed_cuts_bottleneck(n: int, cuts: Sequence[int], p: int) -> int:
    """Bottleneck on all-ones length ``n`` of a non-preemptive fixed cut set."""
    prev = 0
    worst = 0
    for c in sorted(cuts)[: p - 1]:
        if c > n:
            break
        worst = max(worst, c - prev)
        prev = c
    return max(worst, n - prev)


# ---------------------------------------------------------------------------
# Growth base optimization


def center_objective(x: float) -> float:
    """Expected ratio of center guessing on all-ones inputs as a function of x."""
    lx = math.log(x)
    return 2.0 - 2.0 * LN2 / lx + 2.0 / (x * lx)


def weighted_objective(x: float) -> float:
    """Worst-case expected ratio of center guessing on weighted inputs."""
    lx = math.log(x)
    return 2.0 + 2.0 / (x * lx) - 1.0 / lx


def optimize_x(objective: Literal["unweighted", "weighted"] = "unweighted") -> float:
    """Minimize the named objective over (2, 20) by golden-section search."""
    f = {"unweighted": center_objective, "weighted": weighted_objective}[objective]
    mid = 3.0 if objective == "unweighted" else 5.0
    res = minimize_scalar(f, bracket=(2.05, mid, 19.95), method="golden", tol=1e-10)
    return float(res.x)
