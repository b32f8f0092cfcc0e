"""Preemptive online partitioning of integer sequences and continuous flows."""
from .seqcore import (
    LayoutRangeError,
    OnlineEvent,
    PartitionLayout,
    SequenceError,
    WeightedSequence,
    bottleneck,
    load_sequence,
    validate_event_stream,
)
from .offline import optimal_bottleneck, optimal_bottleneck_dp, probe
from .report import RatioReport, emit_report

__all__ = [
    "LayoutRangeError",
    "OnlineEvent",
    "PartitionLayout",
    "RatioReport",
    "SequenceError",
    "WeightedSequence",
    "bottleneck",
    "emit_report",
    "load_sequence",
    "optimal_bottleneck",
    "optimal_bottleneck_dp",
    "probe",
    "validate_event_stream",
]
