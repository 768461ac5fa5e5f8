import pytest
from fractions import Fraction

from fpbs.model import (
    BroadcastSchedule,
    Position,
    Query,
    ScheduleError,
    Violation,
    average_span,
    check_conflict_free,
    described_slot_for,
    normalize_query,
    span_access_time,
)


def test_query_validation():
    with pytest.raises(ValueError):
        Query(0, 1, (1,))
    with pytest.raises(ValueError):
        Query(1, 1, ())
    with pytest.raises(ValueError):
        Query(1, 1, (1, 1))
    with pytest.raises(ValueError):
        Query(1, 1, (0,))
    q = Query(3, 7, (4, 2, 9))
    assert len(q) == 3


def test_normalize_query_dedups_preserving_order():
    q, dropped = normalize_query(1, 0, [5, 3, 5, 3, 7])
    assert q.items == (5, 3, 7)
    assert dropped == 2


def test_position_validation():
    with pytest.raises(ValueError):
        Position(0, 1)
    with pytest.raises(ValueError):
        Position(1, 0)


@pytest.mark.parametrize(
    "t,length,expected",
    [(1, 7, 3), (5, 7, 7), (6, 7, 1), (7, 7, 2), (1, 3, 3), (2, 3, 1), (3, 3, 2)],
)
def test_described_slot_wraps(t, length, expected):
    assert described_slot_for(t, length) == expected


def make_schedule():
    grid = {(1, 1): 10, (1, 2): 11, (2, 2): 12, (2, 4): 13}
    return BroadcastSchedule(channels=2, length=4, grid=grid)


def test_occurrences_sorted_and_cached():
    s = make_schedule()
    assert s.occurrences(12) == [Position(2, 2)]
    assert s.occurrences(99) == []
    s.grid[(1, 3)] = 12
    # cache built on first call: later grid edits are deliberately ignored
    assert s.occurrences(12) == [Position(2, 2)]


def test_conflict_check_flags_adjacent_cross_channel():
    s = make_schedule()
    q = Query(1, 1, (10, 12))
    s.assignment[(1, 10)] = Position(1, 1)
    s.assignment[(1, 12)] = Position(2, 2)
    violations = check_conflict_free(s, [q])
    assert len(violations) == 1
    assert isinstance(violations[0], Violation)
    assert violations[0].gap == 1


def test_conflict_check_allows_same_channel_adjacency():
    s = make_schedule()
    q = Query(1, 1, (10, 11))
    s.assignment[(1, 10)] = Position(1, 1)
    s.assignment[(1, 11)] = Position(1, 2)
    assert check_conflict_free(s, [q]) == []


def test_conflict_check_allows_gap_two():
    s = make_schedule()
    q = Query(1, 1, (11, 13))
    s.assignment[(1, 11)] = Position(1, 2)
    s.assignment[(1, 13)] = Position(2, 4)
    assert check_conflict_free(s, [q]) == []


def test_missing_assignment_raises():
    s = make_schedule()
    with pytest.raises(ScheduleError):
        check_conflict_free(s, [Query(1, 1, (10, 12))])


def test_span_and_average_span():
    s = make_schedule()
    q1 = Query(1, 1, (10, 13))
    q2 = Query(2, 2, (11,))
    s.assignment[(1, 10)] = Position(1, 1)
    s.assignment[(1, 13)] = Position(2, 4)
    s.assignment[(2, 11)] = Position(1, 2)
    assert span_access_time(s, q1) == 3
    assert span_access_time(s, q2) == 0
    assert average_span(s, [q1, q2]) == Fraction(3, 2)
    with pytest.raises(ScheduleError):
        average_span(s, [])


def test_serialize_round_shape():
    s = make_schedule()
    text = s.serialize()
    lines = text.strip().split("\n")
    assert lines[0] == "c1: d10,d11,-,-"
    assert lines[1] == "c2: -,d12,-,d13"
