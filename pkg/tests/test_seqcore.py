import pytest

from seqpart.seqcore import (
    LayoutRangeError,
    OnlineEvent,
    PartitionLayout,
    SequenceError,
    WeightedSequence,
    bottleneck,
    dump_sequence,
    load_sequence,
    locate,
    lower_bound,
    replay_events,
    validate_event_stream,
)


def test_sequence_derived_fields():
    seq = WeightedSequence([3, 1, 2, 4, 1])
    assert (seq.n, seq.total, seq.max_weight) == (5, 11, 4)
    assert seq.prefix_sums() == [0, 3, 4, 6, 10, 11]
    assert seq.range_sum(2, 5) == 7


def test_ones_is_symbolic():
    seq = WeightedSequence.ones(10**12)
    assert seq.total == 10**12 and seq.max_weight == 1 and seq.is_ones
    assert seq.range_sum(1, 11) == 10
    assert seq == WeightedSequence.ones(10**12)


@pytest.mark.parametrize("bad", [[0], [1, -2], [5, 0, 1]])
def test_rejects_non_positive(bad):
    with pytest.raises(SequenceError):
        WeightedSequence(bad)


def test_total_overflow_is_checked():
    with pytest.raises(SequenceError):
        WeightedSequence([2**62, 2**62])


def test_bottleneck_examples():
    assert bottleneck(WeightedSequence([1, 1, 1, 1]), PartitionLayout(2, (3,))) == 2
    assert bottleneck(WeightedSequence([3, 1, 2, 4, 1]), PartitionLayout(2, (4,))) == 6
    assert bottleneck(WeightedSequence([5]), PartitionLayout(2)) == 5


def test_layout_range_and_count():
    with pytest.raises(LayoutRangeError):
        bottleneck(WeightedSequence([1, 1]), PartitionLayout(2, (4,)))
    with pytest.raises(LayoutRangeError):
        PartitionLayout(2, (1, 2))


def test_empty_partitions_allowed():
    seq = WeightedSequence([2, 3])
    assert PartitionLayout(4, (2, 2, 3)).partition_weights(seq) == [2, 0, 3, 0]


def test_lower_bound():
    assert lower_bound(WeightedSequence([3, 1, 2, 4, 1]), 2) == 6
    assert lower_bound(WeightedSequence([9, 1]), 4) == 9


def _legal_stream():
    return [
        OnlineEvent.observe(1),
        OnlineEvent.insert(2),
        OnlineEvent.observe(1),
        OnlineEvent.observe(1),
        OnlineEvent.remove(2),
        OnlineEvent.insert(4),
    ]


def test_validate_accepts_legal_stream():
    check = validate_event_stream(WeightedSequence.ones(3), _legal_stream(), 2)
    assert check and check.layout == PartitionLayout(2, (4,))


def test_validate_rejects_past_insert():
    ev = [OnlineEvent.observe(1), OnlineEvent.observe(1), OnlineEvent.observe(1), OnlineEvent.insert(2)]
    check = validate_event_stream(WeightedSequence.ones(3), ev, 2)
    assert not check and "current request" in check.problems[0]


def test_validate_rejects_reinsert_of_removed_position():
    ev = [
        OnlineEvent.observe(1),
        OnlineEvent.insert(2),
        OnlineEvent.remove(2),
        OnlineEvent.insert(2),
        OnlineEvent.observe(1),
    ]
    assert not validate_event_stream(WeightedSequence.ones(2), ev, 3)


def test_validate_rejects_too_many_separators():
    ev = [OnlineEvent.observe(1), OnlineEvent.insert(1), OnlineEvent.insert(2)]
    assert not validate_event_stream(WeightedSequence.ones(1), ev, 2)


def test_validate_rejects_wrong_weight_and_short_stream():
    assert not validate_event_stream(WeightedSequence([2]), [OnlineEvent.observe(1)], 2)
    assert not validate_event_stream(WeightedSequence.ones(2), [OnlineEvent.observe(1)], 2)


def test_replay_matches_validation_layout():
    assert replay_events(_legal_stream(), 2) == PartitionLayout(2, (4,))


def test_generators_and_files(tmp_path):
    assert list(load_sequence("gen:exp:4")) == [1, 2, 4, 8]
    tight = load_sequence("gen:tight:8")
    assert list(tight) == [1, 1, 1, 1, 4]
    assert load_sequence("gen:ones:5") == WeightedSequence.ones(5)
    path = tmp_path / "seq.txt"
    dump_sequence(WeightedSequence([3, 1, 2]), path)
    assert list(load_sequence(path)) == [3, 1, 2]
    with pytest.raises(SequenceError):
        load_sequence("gen:exp:63")


def test_locate_unit_to_request():
    pre = WeightedSequence([3, 1, 2]).prefix_sums()
    assert [locate(pre, u) for u in range(1, 7)] == [1, 1, 1, 2, 3, 3]
