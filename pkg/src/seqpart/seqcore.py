"""Sequences, layouts, and the preemptive event model shared by every algorithm.

Separator positions are 1-based and mean "before request ``s``": a layout on
a sequence of length ``n`` uses the implicit sentinels ``s_0 = 1`` and
``s_p = n + 1``, so a separator at ``n + 1`` closes the sequence and leaves an
empty last partition.
"""
from __future__ import annotations

from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from itertools import accumulate, repeat
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

INT64_MAX = 2**63 - 1


class SequenceError(ValueError):
    """Invalid weights or an overflowing total."""


class LayoutRangeError(ValueError):
    """Separator outside ``[1, n + 1]`` or too many separators."""


class WeightedSequence:
    """Finite sequence of positive integer weights.

    All-ones sequences are kept symbolic (``WeightedSequence.ones(n)``) so that
    lengths in the millions never get materialized.
    """

    __slots__ = ("_weights", "_n", "_total", "_max", "_prefix")

    def __init__(self, weights: Iterable[int]):
        ws = tuple(int(w) for w in weights)
        for w in ws:
            if w < 1:
                raise SequenceError(f"weights must be >= 1, got {w}")
        total = sum(ws)
        if total > INT64_MAX:
            raise SequenceError("total weight overflows 64 bits")
        self._weights = ws
        self._n = len(ws)
        self._total = total
        self._max = max(ws) if ws else 0
        self._prefix: list[int] | None = None

    @classmethod
    def ones(cls, n: int) -> "WeightedSequence":
        if n < 0:
            raise SequenceError("length must be non-negative")
        if n > INT64_MAX:
            raise SequenceError("total weight overflows 64 bits")
        seq = cls.__new__(cls)
        seq._weights = None
        seq._n = int(n)
        seq._total = int(n)
        seq._max = 1 if n else 0
        seq._prefix = None
        return seq

    @property
    def n(self) -> int:
        return self._n

    @property
    def total(self) -> int:
        return self._total

    @property
    def max_weight(self) -> int:
        return self._max

    @property
    def is_ones(self) -> bool:
        return self._weights is None or self._max <= 1

    def __len__(self) -> int:
        return self._n

    def __iter__(self) -> Iterator[int]:
        if self._weights is None:
            return repeat(1, self._n)
        return iter(self._weights)

    def __getitem__(self, i: int) -> int:
        """0-based access."""
        if self._weights is None:
            if not -self._n <= i < self._n:
                raise IndexError(i)
            return 1
        return self._weights[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedSequence):
            return NotImplemented
        if self._n != other._n or self._total != other._total or self._max != other._max:
            return False
        if self.is_ones and other.is_ones:
            return True
        return all(a == b for a, b in zip(self, other))

    def __repr__(self) -> str:
        if self._weights is None:
            return f"WeightedSequence.ones({self._n})"
        head = ", ".join(map(str, self._weights[:8]))
        tail = ", ..." if self._n > 8 else ""
        return f"WeightedSequence([{head}{tail}])"

    def prefix_sums(self) -> list[int]:
        """``P[k] = w_1 + ... + w_k`` with ``P[0] = 0`` (cached, materializes)."""
        if self._prefix is None:
            if self._weights is None:
                self._prefix = list(range(self._n + 1))
            else:
                self._prefix = [0, *accumulate(self._weights)]
        return self._prefix

    def range_sum(self, start: int, stop: int) -> int:
        """Sum of requests ``start .. stop - 1`` (1-based, half-open)."""
        if self._weights is None:
            return max(0, stop - start)
        pre = self.prefix_sums()
        return pre[stop - 1] - pre[start - 1]


@dataclass(frozen=True)
class PartitionLayout:
    """``p`` partitions described by at most ``p - 1`` sorted separator positions."""

    p: int
    separators: tuple[int, ...] = ()

    def __post_init__(self):
        if self.p < 1:
            raise LayoutRangeError("p must be >= 1")
        seps = tuple(sorted(int(s) for s in self.separators))
        if len(seps) > self.p - 1:
            raise LayoutRangeError(f"{len(seps)} separators exceed p - 1 = {self.p - 1}")
        object.__setattr__(self, "separators", seps)

    def check_range(self, n: int) -> None:
        for s in self.separators:
            if not 1 <= s <= n + 1:
                raise LayoutRangeError(f"separator {s} outside [1, {n + 1}]")

    def boundaries(self, n: int) -> list[int]:
        return [1, *self.separators, n + 1]

    def partition_weights(self, seq: WeightedSequence) -> list[int]:
        self.check_range(seq.n)
        b = self.boundaries(seq.n)
        return [seq.range_sum(b[j], b[j + 1]) for j in range(len(b) - 1)]


def bottleneck(seq: WeightedSequence, layout: PartitionLayout) -> int:
    """Weight of the heaviest partition of ``seq`` under ``layout``."""
    return max(layout.partition_weights(seq))


def lower_bound(seq: WeightedSequence, p: int) -> int:
    """``max(max_w, ceil(W_n / p))``, a lower bound on any p-way bottleneck."""
    return max(seq.max_weight, -(-seq.total // p))


# ---------------------------------------------------------------------------
# Online event model


class OnlineEvent(NamedTuple):
    kind: str
    value: int = 0

    @classmethod
    def observe(cls, weight: int) -> "OnlineEvent":
        return cls(OBSERVE, weight)

    @classmethod
    def insert(cls, position: int) -> "OnlineEvent":
        return cls(INSERT, position)

    @classmethod
    def remove(cls, position: int) -> "OnlineEvent":
        return cls(REMOVE, position)


OBSERVE = "observe_request"
INSERT = "insert_separator"
REMOVE = "remove_separator"


@dataclass
class StreamCheck:
    """Outcome of :func:`validate_event_stream`; truthy iff the stream is legal."""

    ok: bool
    problems: list[str] = field(default_factory=list)
    layout: PartitionLayout | None = None

    def __bool__(self) -> bool:
        return self.ok


def validate_event_stream(
    seq: WeightedSequence, events: Sequence[OnlineEvent], p: int
) -> StreamCheck:
    """Referee for the preemptive online model.

    While request ``j`` is the latest one observed, a separator may be
    inserted at position ``j + 1`` (right after it) or ``j`` (right before it,
    i.e. splitting it off from the previous partition).  Removed positions can
    never be re-inserted, and the live separator count never exceeds ``p - 1``.
    Every observed weight must match ``seq`` and the whole sequence must be seen.
    """
    problems: list[str] = []
    live: Counter[int] = Counter()
    removed: set[int] = set()
    it = iter(seq)
    j = count = 0
    for k, ev in enumerate(events):
        if ev.kind == OBSERVE:
            expected = next(it, None)
            j += 1
            if expected is None:
                problems.append(f"event {k}: request {j} beyond end of sequence")
            elif ev.value != expected:
                problems.append(f"event {k}: observed {ev.value}, sequence has {expected}")
        elif ev.kind == INSERT:
            pos = ev.value
            if j == 0:
                problems.append(f"event {k}: insert before any request")
            elif pos not in (j, j + 1):
                problems.append(f"event {k}: insert at {pos}, current request is {j}")
            elif pos in removed:
                problems.append(f"event {k}: re-insert at removed position {pos}")
            live[pos] += 1
            count += 1
            if count > p - 1:
                problems.append(f"event {k}: {count} separators exceed p - 1")
        elif ev.kind == REMOVE:
            pos = ev.value
            if live[pos] <= 0:
                problems.append(f"event {k}: remove at {pos} with no separator there")
            else:
                live[pos] -= 1
                count -= 1
                if live[pos] == 0:
                    del live[pos]
                removed.add(pos)
        else:
            problems.append(f"event {k}: unknown kind {ev.kind!r}")
    if j != seq.n:
        problems.append(f"observed {j} requests, sequence has {seq.n}")
    layout = None
    if not problems:
        layout = PartitionLayout(p, tuple(live.elements()))
    return StreamCheck(not problems, problems, layout)


def replay_events(events: Iterable[OnlineEvent], p: int) -> PartitionLayout:
    """Final layout implied by an event log (no legality checks)."""
    live: Counter[int] = Counter()
    for ev in events:
        if ev.kind == INSERT:
            live[ev.value] += 1
        elif ev.kind == REMOVE:
            live[ev.value] -= 1
            if live[ev.value] == 0:
                del live[ev.value]
    return PartitionLayout(p, tuple(live.elements()))


# ---------------------------------------------------------------------------
# Sequence files


def load_sequence(spec: str | Path) -> WeightedSequence:
    """Read a sequence file or a generator spec.

    Files hold positive integers separated by whitespace.  Generator specs:
    ``gen:ones:N``, ``gen:exp:I`` (``1, 2, ..., 2^(I-1)``) and
    ``gen:tight:W`` (``W/2`` ones followed by one weight ``W/2``).
    """
    text = str(spec)
    if text.startswith("gen:"):
        return _generate(text)
    raw = Path(text).read_text(encoding="utf-8").split()
    return WeightedSequence(int(tok) for tok in raw)


def _generate(text: str) -> WeightedSequence:
    parts = text.split(":")
    if len(parts) != 3:
        raise SequenceError(f"bad generator spec {text!r}")
    kind, arg = parts[1], int(parts[2])
    if kind == "ones":
        return WeightedSequence.ones(arg)
    if kind == "exp":
        if arg > 62:
            raise SequenceError("exponential sequences are limited to 62 terms")
        return WeightedSequence(2**k for k in range(arg))
    if kind == "tight":
        half = arg // 2
        return WeightedSequence([1] * half + [half])
    raise SequenceError(f"unknown generator {kind!r}")


def dump_sequence(seq: WeightedSequence, path: str | Path) -> None:
    Path(path).write_text("\n".join(map(str, seq)) + "\n", encoding="utf-8")


def locate(prefix: Sequence[int], unit: int) -> int:
    """1-based index of the request containing unit ``unit`` of the unit expansion."""
    return bisect_right(prefix, unit - 1)
