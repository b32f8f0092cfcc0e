"""Offline reference: the Probe sweep and the optimal bottleneck oracles."""
from __future__ import annotations

from bisect import bisect_right
from typing import Iterable, Sequence

from .seqcore import PartitionLayout, WeightedSequence

DP_GUARD = 10**7


class InfeasibleError(ValueError):
    """A single weight exceeds the probe bound."""


class SizeError(ValueError):
    """Instance too large for the quadratic dynamic program."""


def probe(weights: Iterable[int], bound: int) -> list[int]:
    """Greedy left-to-right sweep with partitions of weight at most ``bound``.

    Zero weights are accepted and join the open partition.

    >>> probe([2, 3, 1, 4], 5)
    [5, 5]
    """
    parts: list[int] = []
    cur = None
    for w in weights:
        if w > bound:
            raise InfeasibleError(f"weight {w} exceeds bound {bound}")
        if cur is None:
            cur = w
        elif cur + w <= bound:
            cur += w
        else:
            parts.append(cur)
            cur = w
    if cur is not None:
        parts.append(cur)
    return parts


def probe_count(seq: WeightedSequence, bound: int, limit: int | None = None) -> int:
    """Number of partitions Probe(bound) creates; stops early past ``limit``.

    Jumps over maximal partitions by bisecting the prefix sums, so the cost
    is ``O(count * log n)`` rather than ``O(n)``.
    """
    n = seq.n
    if n == 0:
        return 0
    if bound < seq.max_weight:
        raise InfeasibleError(f"max weight {seq.max_weight} exceeds bound {bound}")
    if seq.is_ones and seq.max_weight == 1:
        return -(-n // bound)
    pre = seq.prefix_sums()
    count = 0
    start = 0
    while start < n:
        start = bisect_right(pre, pre[start] + bound, lo=start + 1) - 1
        count += 1
        if limit is not None and count > limit:
            break
    return count


def optimal_bottleneck(seq: WeightedSequence, p: int) -> int:
    """Smallest bound whose probe yields at most ``p`` partitions (binary search)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if seq.n == 0:
        return 0
    lo = max(seq.max_weight, -(-seq.total // p))
    hi = seq.total
    while lo < hi:
        mid = (lo + hi) // 2
        if probe_count(seq, mid, limit=p) <= p:
            hi = mid
        else:
            lo = mid + 1
    return lo


def optimal_layout(seq: WeightedSequence, p: int) -> PartitionLayout:
    """A layout achieving :func:`optimal_bottleneck` (the probe cuts at that bound)."""
    best = optimal_bottleneck(seq, p)
    if seq.n == 0:
        return PartitionLayout(p)
    pre = seq.prefix_sums()
    seps = []
    start = 0
    while True:
        start = bisect_right(pre, pre[start] + best, lo=start + 1) - 1
        if start >= seq.n:
            break
        seps.append(start + 1)
    return PartitionLayout(p, tuple(seps))


def optimal_bottleneck_dp(seq: WeightedSequence, p: int) -> int:
    """Exact optimum by dynamic programming over (prefix length, parts used)."""
    n = seq.n
    if n * p > DP_GUARD:
        raise SizeError(f"n * p = {n * p} exceeds {DP_GUARD}")
    if n == 0:
        return 0
    pre = seq.prefix_sums()
    inf = float("inf")
    # best[i]: optimal bottleneck of the first i requests with k parts
    best = [inf] * (n + 1)
    best[0] = 0
    for i in range(1, n + 1):
        best[i] = pre[i]
    for _ in range(2, p + 1):
        nxt = [0] * (n + 1)
        for i in range(1, n + 1):
            v = best[i]
            for j in range(1, i):
                cand = max(best[j], pre[i] - pre[j])
                if cand < v:
                    v = cand
            nxt[i] = v
        best = nxt
    return int(best[n])


# ---------------------------------------------------------------------------
# Run-length encoded sequences (long runs of equal weights)


def probe_count_runs(runs: Sequence[tuple[int, int]], bound: int) -> int:
    """Probe(bound) partition count over ``(value, repeat)`` runs in O(#runs)."""
    count = 0
    cur = 0
    for value, reps in runs:
        if reps <= 0:
            continue
        if value > bound:
            raise InfeasibleError(f"weight {value} exceeds bound {bound}")
        if value == 0:
            if count == 0:
                count = 1
            continue
        if count == 0:
            count, cur = 1, 0
        take = min(reps, (bound - cur) // value)
        cur += take * value
        reps -= take
        if reps:
            per = bound // value
            extra = -(-reps // per)
            count += extra
            cur = (reps - (extra - 1) * per) * value
    return count


def optimal_bottleneck_runs(runs: Sequence[tuple[int, int]], p: int) -> int:
    """:func:`optimal_bottleneck` for a run-length encoded sequence."""
    live = [(v, c) for v, c in runs if c > 0]
    if not live:
        return 0
    total = sum(v * c for v, c in live)
    lo = max(max(v for v, _ in live), -(-total // p))
    hi = total
    while lo < hi:
        mid = (lo + hi) // 2
        if probe_count_runs(live, mid) <= p:
            hi = mid
        else:
            lo = mid + 1
    return lo
