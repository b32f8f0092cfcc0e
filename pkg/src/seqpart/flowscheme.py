"""Super-partitions, the periodic merge scheme, and the Flow algorithm built on it.

A super-partition with base ``b`` starts as ``alpha^b, ..., alpha^(b+p-1)``
with ``alpha = x^(1/p)`` and repeatedly merges its adjacent pair of minimal
sum.  The periodic scheme advances ``p`` super-partitions (bases ``1..p``)
round-robin for ``p - 1`` rounds and records the length-``p`` prefix of their
concatenation whenever it changes.  Those prefixes are the partition weights
of a Flow algorithm; the final prefix is a scaled copy of the first, so the
scheme repeats forever.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .offline import optimal_bottleneck
from .online import OnlineRun, PreemptiveEngine
from .report import RatioReport
from .seqcore import WeightedSequence

RTOL = 1e-9
LN2 = math.log(2.0)
SCHEME_LIMIT = LN2 / (math.sqrt(2.0) - 1.0)


class ExhaustedError(ValueError):
    """merge_next on a super-partition of length 1."""


class DomainError(ValueError):
    """Configuration outside the analyzed range."""


class WarmupError(ValueError):
    """Flow stopped before the warm-up volume."""


def is_power_of_two(v: int) -> bool:
    return v > 0 and v & (v - 1) == 0


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= RTOL * max(abs(a), abs(b))


def _same_state(a: Sequence[float], b: Sequence[float]) -> bool:
    return len(a) == len(b) and all(_close(u, v) for u, v in zip(a, b))


# ---------------------------------------------------------------------------
# Super-partitions


@dataclass(frozen=True)
class SuperPartition:
    base: int
    entries: tuple[float, ...]

    @classmethod
    def initial(cls, p: int, base: int, x: float = 2.0) -> "SuperPartition":
        if not 1 <= base <= p:
            raise ValueError(f"base must lie in [1, {p}]")
        return cls(base, tuple(x ** ((base + k) / p) for k in range(p)))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def total(self) -> float:
        return math.fsum(self.entries)


def min_pair_index(entries: Sequence[float]) -> int:
    """Leftmost index j minimizing ``entries[j] + entries[j + 1]`` (ties within 1e-9)."""
    sums = [entries[j] + entries[j + 1] for j in range(len(entries) - 1)]
    best = min(sums)
    for j, s in enumerate(sums):
        if s <= best * (1.0 + RTOL):
            return j
    raise AssertionError("unreachable")


def merge_next(sp: SuperPartition) -> SuperPartition:
    """Merge the adjacent pair with minimal sum."""
    if len(sp) < 2:
        raise ExhaustedError("super-partition has a single entry")
    e = sp.entries
    j = min_pair_index(e)
    return SuperPartition(sp.base, e[:j] + (e[j] + e[j + 1],) + e[j + 2 :])


# ---------------------------------------------------------------------------
# State classification


@dataclass(frozen=True)
class StateClass:
    """Shape of a scheme state.

    ``short`` is the length ``l = L - t`` of the most-merged super-partitions,
    ``m`` the rightmost fully included one of that length and ``c`` the number
    of fully included ones.  ``partial_slots`` counts prefix slots taken by the
    incomplete super-partition (``partial_short`` tells whether it is short).
    """

    L: int
    t: int
    m: int
    c: int
    short: int
    short_full: int
    long_full: int
    partial_slots: int
    partial_short: bool
    analyzed: bool


def classify_lengths(lengths: Sequence[int], p: int) -> StateClass:
    """Classify a state from the current super-partition lengths."""
    short = min(lengths)
    L = 1 << short.bit_length()
    t = L - short
    used = 0
    c = m = short_full = long_full = 0
    partial = 0
    partial_short = False
    for k, ln in enumerate(lengths, start=1):
        if used + ln <= p:
            used += ln
            c += 1
            if ln == short:
                short_full += 1
                m = k
            else:
                long_full += 1
            if used == p:
                break
        else:
            partial = p - used
            partial_short = ln == short
            break
    return StateClass(L, t, m, c, short, short_full, long_full, partial, partial_short, is_power_of_two(p))


def _classify_fast(p: int, la: int, merged: int) -> StateClass:
    """Closed form of :func:`classify_lengths` for round-robin lengths.

    The first ``merged`` super-partitions have length ``la``, the rest ``la + 1``.
    """
    lb = la + 1
    L = 1 << la.bit_length()
    t = L - la
    if merged * la >= p:
        c = p // la
        partial = p - c * la
        return StateClass(L, t, c, c, la, c, 0, partial, partial > 0, is_power_of_two(p))
    rest = p - merged * la
    long_full = rest // lb
    partial = rest - long_full * lb
    c = merged + long_full
    return StateClass(L, t, merged, c, la, merged, long_full, partial, False, is_power_of_two(p))


# ---------------------------------------------------------------------------
# The periodic scheme


@dataclass
class SchemeStep:
    """One merge_next of the scheme (emitted or not)."""

    round: int
    index: int  # 1-based super-partition index
    configuration: tuple[tuple[float, ...], ...]
    emitted: bool


@dataclass
class SchemeTrace:
    p: int
    x: float
    states: list[tuple[float, ...]]
    classes: list[StateClass]
    # per state (from the second on): prefix position of the merged pair and
    # whether the merge opened a new last partition ("split") or grew it ("grow")
    transitions: list[tuple[int, str]] = field(default_factory=list)
    steps: list[SchemeStep] | None = None

    def __len__(self) -> int:
        return len(self.states)

    @property
    def scale(self) -> float:
        """Factor mapping the first state onto the last."""
        return self.states[-1][0] / self.states[0][0]


def _prefix_of(sps: Sequence[SuperPartition], p: int) -> tuple[float, ...]:
    out: list[float] = []
    for sp in sps:
        out.extend(sp.entries)
        if len(out) >= p:
            break
    return tuple(out[:p])


def periodic_scheme(p: int, x: float = 2.0, record_steps: bool = False) -> SchemeTrace:
    """Run the scheme with explicit super-partitions (reference implementation)."""
    if p < 2:
        raise ValueError("p must be >= 2")
    sps = [SuperPartition.initial(p, b, x) for b in range(1, p + 1)]
    states = [_prefix_of(sps, p)]
    classes = [classify_lengths([len(s) for s in sps], p)]
    transitions: list[tuple[int, str]] = []
    steps = [SchemeStep(0, 0, tuple(s.entries for s in sps), True)] if record_steps else None
    for rnd in range(1, p):
        for i in range(p):
            offset = sum(len(s) for s in sps[:i])
            pos = offset + min_pair_index(sps[i].entries)
            sps[i] = merge_next(sps[i])
            emitted = False
            if offset < p:
                cand = _prefix_of(sps, p)
                if not _same_state(cand, states[-1]):
                    states.append(cand)
                    classes.append(classify_lengths([len(s) for s in sps], p))
                    transitions.append((pos, "split" if pos <= p - 2 else "grow"))
                    emitted = True
            if steps is not None:
                steps.append(SchemeStep(rnd, i + 1, tuple(s.entries for s in sps), emitted))
    return SchemeTrace(p, x, states, classes, transitions, steps)


def base_evolution(p: int, x: float = 2.0) -> tuple[list[np.ndarray], list[int]]:
    """All states of the base-1 super-partition and the pair merged at each step."""
    cur = np.array([x ** (k / p) for k in range(1, p + 1)])
    states = [cur]
    picks = []
    for _ in range(p - 1):
        sums = cur[:-1] + cur[1:]
        best = sums.min()
        j = int(np.argmax(sums <= best * (1.0 + RTOL)))
        cur = np.concatenate((cur[:j], [cur[j] + cur[j + 1]], cur[j + 2 :]))
        states.append(cur)
        picks.append(j)
    return states, picks


@dataclass
class StreamState:
    values: np.ndarray
    cls: StateClass
    round: int
    index: int
    merge_pos: int  # -1 for the initial state


def stream_scheme(p: int, x: float = 2.0) -> Iterator[StreamState]:
    """Emitted scheme states, generated without materializing super-partitions.

    Super-partition ``k`` is always ``x^((k-1)/p)`` times the base-1 one after
    the same number of merges, so the base-1 evolution suffices.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    evo, picks = base_evolution(p, x)
    gains = np.array([x ** (k / p) for k in range(p)])
    prev = evo[0]
    yield StreamState(prev, _classify_fast(p, p, p), 0, 0, -1)
    for rnd in range(1, p):
        a, b = evo[rnd], evo[rnd - 1]
        la, lb = len(a), len(b)
        pick = picks[rnd - 1]
        for i in range(1, p + 1):
            offset = (i - 1) * la
            if offset >= p:
                break
            na = min(i, -(-p // la))
            block = np.outer(gains[:na], a).ravel()
            if len(block) < p:
                nb = -(-(p - len(block)) // lb)
                block = np.concatenate((block, np.outer(gains[i : i + nb], b).ravel()))
            cand = block[:p]
            if np.any(np.abs(cand - prev) > RTOL * np.maximum(np.abs(cand), np.abs(prev))):
                prev = cand
                yield StreamState(cand, _classify_fast(p, la, i), rnd, i, offset + pick)


def trace_from_stream(p: int, x: float = 2.0) -> SchemeTrace:
    states, classes, transitions = [], [], []
    for st in stream_scheme(p, x):
        states.append(tuple(st.values.tolist()))
        classes.append(st.cls)
        if st.merge_pos >= 0:
            transitions.append((st.merge_pos, "split" if st.merge_pos <= p - 2 else "grow"))
    return SchemeTrace(p, x, states, classes, transitions)


# ---------------------------------------------------------------------------
# Ratio analysis


def max_over_avg(state: Sequence[float]) -> float:
    arr = np.asarray(state, dtype=float)
    return float(arr.max() / arr.mean())


def scheme_ratio(trace: SchemeTrace) -> RatioReport:
    """Max-over-average ratio of every state; reports the worst one."""
    ratios = [max_over_avg(s) for s in trace.states]
    k = int(np.argmax(ratios))
    cls = trace.classes[k]
    return RatioReport.from_samples(
        "periodic-scheme",
        f"p={trace.p},x={trace.x}",
        ratios,
        breakdown={
            "argmax_state": k,
            "L": cls.L,
            "t": cls.t,
            "m": cls.m,
            "c": cls.c,
            "analyzed": cls.analyzed,
            "ratios": ratios,
        },
        reference=SCHEME_LIMIT,
    )


def scheme_max_ratio(p: int, x: float = 2.0) -> tuple[float, int, StateClass]:
    """Streaming worst max-over-average ratio (for large p): (ratio, state index, class)."""
    best = -1.0
    where = 0
    best_cls = None
    for k, st in enumerate(stream_scheme(p, x)):
        v = st.values
        r = float(v.max() * p / v.sum())
        if r > best:
            best, where, best_cls = r, k, st.cls
    return best, where, best_cls


def lemma12_closed_forms(p: int, x: float, i: int, L: int, t: int) -> tuple[float, float]:
    """Total weight and maximum entry of the base-``i`` super-partition at length ``L - t``."""
    if not is_power_of_two(p) or not is_power_of_two(L):
        raise DomainError("p and L must be powers of two")
    if not 1 <= t <= L // 2:
        raise DomainError(f"t={t} outside [1, {L // 2}]")
    a = x ** (1.0 / p)
    total = a**i * (x - 1.0) / (a - 1.0)
    top = a**i * a ** (2 * (t - 1) * p / L) * (a ** (2 * p / L) - 1.0) / (a - 1.0)
    return total, top


def lemma13_bounds(p: int, L: int, t: int, m: int, c: int) -> tuple[float, float, float]:
    """The three upper bounds on max/avg for configuration (L, t, m) with c full super-partitions.

    A bound whose denominator is not positive is vacuous and returned as inf.
    ``m`` only enters through the validity check.
    """
    if not is_power_of_two(p) or not is_power_of_two(L):
        raise DomainError("p and L must be powers of two")
    if not 1 <= t <= L // 2:
        raise DomainError(f"t={t} outside [1, {L // 2}]")
    if c < 1 or not 1 <= m <= c:
        raise DomainError(f"invalid (m, c) = ({m}, {c})")
    l = L - t
    q = 2.0 ** (2.0 / L)
    d1 = 2.0 ** ((p + 1 - l) / (p * (l + 1))) - 1.0
    b1 = LN2 * 2.0 ** (2.0 * t / L) * (1.0 - 1.0 / q) / d1 if d1 > 0 else math.inf
    d2 = 2.0 ** (1.0 / LN2) * LN2 * (p + 2 - L)
    b2 = 2.0 * p * (q - 1.0) * L / d2 if d2 > 0 else math.inf
    d3 = 2.0 ** ((c + 2) / p) * (2.0 ** (1.0 / p) - 1.0) + 2.0 ** (-1.0 / p) - 2.0 ** (-c / p)
    b3 = 4.0 * LN2 * (q - 1.0) * 2.0 ** (-2.0 * p / (c * L)) / d3 if d3 > 0 else math.inf
    return b1, b2, b3


def lemma11_check(trace: SchemeTrace | Sequence[Sequence[float]], p: int | None = None) -> bool:
    """avg of each state is at least p/(p+4) times the avg of its successor."""
    states = trace.states if isinstance(trace, SchemeTrace) else list(trace)
    if p is None:
        p = trace.p if isinstance(trace, SchemeTrace) else len(states[0])
    for prev, cur in zip(states, states[1:]):
        a_prev = math.fsum(prev) / len(prev)
        a_cur = math.fsum(cur) / len(cur)
        if a_prev < p / (p + 4) * a_cur * (1.0 - 1e-12):
            return False
    return True


def max_location_ok(state: Sequence[float], cls: StateClass, lengths: Sequence[int]) -> bool:
    """Maximum sits in super-partition m or in a short incomplete super-partition."""
    arr = np.asarray(state)
    top = arr.max()
    starts = np.concatenate(([0], np.cumsum(lengths)))
    lo, hi = starts[cls.m - 1], min(starts[cls.m], len(arr))
    cands = [arr[lo:hi].max()]
    if cls.partial_short and cls.partial_slots:
        cands.append(arr[len(arr) - cls.partial_slots :].max())
    return any(_close(v, top) for v in cands)


# ---------------------------------------------------------------------------
# Flow


@dataclass
class FlowOutcome:
    t_max: float
    weights: list[float]
    bottleneck: float
    optimum: float
    ratio: float
    cycle: int
    state: int


class FlowCycle:
    """One cycle of the scheme viewed as a Flow algorithm.

    ``totals[i]`` is the flow volume when state ``i`` is complete; during the
    transition to state ``i + 1`` the first ``p - 1`` weights are already in
    place and the last partition fills up.
    """

    def __init__(self, p: int, x: float = 2.0):
        trace = trace_from_stream(p, x)
        self.p = p
        self.x = x
        self.trace = trace
        self.states = np.array(trace.states)
        self.totals = self.states.sum(axis=1)
        self.heads = self.states[:, :-1].sum(axis=1)
        self.head_max = self.states[:, :-1].max(axis=1)
        self.warmup = float(self.totals[0])
        self.scale = float(self.totals[-1] / self.totals[0])
        self.ratios = self.states.max(axis=1) * p / self.totals

    def locate(self, t: float) -> tuple[int, int, float]:
        """(cycle, state index of the target, rescaled time)."""
        if t < self.warmup * (1.0 - RTOL):
            raise WarmupError(f"t_max={t} below warm-up {self.warmup}")
        k = int(math.floor(math.log(max(t, self.warmup) / self.warmup) / math.log(self.scale)))
        tt = t / self.scale**k
        while tt >= self.totals[-1] * (1.0 + RTOL):
            k += 1
            tt = t / self.scale**k
        while tt < self.warmup * (1.0 - RTOL) and k > 0:
            k -= 1
            tt = t / self.scale**k
        tt = min(max(tt, self.warmup), float(self.totals[-1]))
        i = bisect_right(self.totals.tolist(), tt * (1.0 + 1e-13))
        i = min(max(i, 1), len(self.totals) - 1)
        if _close(tt, float(self.totals[i - 1])):
            return k, i - 1, tt
        return k, i, tt

    def outcome(self, t: float) -> FlowOutcome:
        k, i, tt = self.locate(t)
        head = self.states[i, :-1]
        y = tt - float(self.heads[i])
        y = min(max(y, 0.0), float(self.states[i, -1]))
        s = self.scale**k
        weights = [float(v) * s for v in head] + [y * s]
        top = max(weights)
        opt = t / self.p
        return FlowOutcome(t, weights, top, opt, top / opt, k, i)

    def ratio(self, t: float) -> float:
        k, i, tt = self.locate(t)
        y = min(max(tt - float(self.heads[i]), 0.0), float(self.states[i, -1]))
        return max(float(self.head_max[i]), y) * self.p / tt


@lru_cache(maxsize=64)
def flow_cycle(p: int, x: float = 2.0) -> FlowCycle:
    return FlowCycle(p, x)


def flow_simulate(p: int, x: float = 2.0, t_max: float = 0.0) -> FlowOutcome:
    """Partition weights of the scheme-driven Flow algorithm when flow stops at ``t_max``.

    ``t_max`` is in scheme units, where the warm-up volume is the total of the
    base-1 super-partition.
    """
    return flow_cycle(p, x).outcome(t_max)


# ---------------------------------------------------------------------------
# Part via Flow


def _flow_actions(cyc: FlowCycle, unit: float) -> Iterator[tuple[float, int | None]]:
    """(time, merge position or None) for every separator action, forever."""
    acc = 0.0
    for v in cyc.states[0][:-1]:
        acc += float(v)
        yield acc * unit, None
    k = 0
    trans = cyc.trace.transitions
    while True:
        s = cyc.scale**k * unit
        for i, (pos, kind) in enumerate(trans):
            if kind == "split":
                yield float(cyc.totals[i]) * s, pos
        k += 1


def part_via_flow(
    seq: WeightedSequence, p: int, x: float = 2.0, unit: float = 1.0, record: bool = True
) -> OnlineRun:
    """Drive Part with the Flow algorithm's targets.

    A separator action fires as soon as the cumulative weight reaches its
    Flow time (``unit`` weight per scheme unit).  Merges are replayed on the
    actual partitions, so their weights track the scheme up to rounding.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    cyc = flow_cycle(p, x)
    actions = _flow_actions(cyc, unit)
    next_time, next_pos = next(actions)
    engine = PreemptiveEngine(p, record)
    starts = [1]
    units = 0
    for w in seq:
        engine.observe(w)
        units += w
        if units < next_time * (1.0 - 1e-12):
            continue
        while units >= next_time * (1.0 - 1e-12):
            if next_pos is not None:
                del starts[next_pos + 1]
            starts.append(engine.j + 1)
            next_time, next_pos = next(actions)
        engine.commit(starts[1:])
    opt = optimal_bottleneck(seq, p)
    layout = engine.layout()
    weights = layout.partition_weights(seq)
    top = max(weights)
    info = {
        "x": x,
        "unit": unit,
        "max_over_avg_part": seq.max_weight * p / seq.total if seq.total else 0.0,
    }
    return OnlineRun("part-via-flow", p, None, engine.events, layout, top, opt, info)


# ---------------------------------------------------------------------------
# Figure data


def flow_sup_ratio(p: int, x: float = 2.0) -> float:
    """Worst Flow ratio over all stop times (empty last partition included)."""
    cyc = flow_cycle(p, x)
    head = cyc.head_max[1:] * p / cyc.heads[1:]
    return float(max(cyc.ratios.max(), head.max()))


def figure1_data(pmin: int = 2, pmax: int = 256, x: float = 2.0, metric: str = "scheme") -> list[tuple[int, float]]:
    """(p, ratio) pairs; ``metric`` is "scheme" (max-over-average) or "flow" (worst stop time)."""
    if metric == "scheme":
        return [(p, scheme_max_ratio(p, x)[0]) for p in range(pmin, pmax + 1)]
    if metric == "flow":
        return [(p, flow_sup_ratio(p, x)) for p in range(pmin, pmax + 1)]
    raise ValueError(f"unknown metric {metric!r}")


def power_of_two_minima(data: Sequence[tuple[int, float]]) -> dict[int, bool]:
    """For every power of two in range: is its value <= both neighbors' values?"""
    vals = dict(data)
    out = {}
    for p, v in vals.items():
        if is_power_of_two(p):
            nb = [vals[q] for q in (p - 1, p + 1) if q in vals]
            out[p] = all(v <= w for w in nb)
    return out
