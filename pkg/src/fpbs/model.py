"""Core domain types for multi-channel broadcast schedules.

Slots and channels are 1-based everywhere.  A schedule is a |C| x L grid of
optional item ids plus an index channel and a canonical per-(query, item)
position assignment.  The conflict rule: two items needed by the same query
that sit on different channels must be more than one slot apart, otherwise
the client cannot switch channels in time to catch both.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

EMPTY_CELL = "-"
CELL_SEP = ","


class ScheduleError(Exception):
    """Structural problem in a schedule or its inputs."""


@dataclass(frozen=True, order=True)
class Position:
    channel: int
    slot: int

    def __post_init__(self):
        if self.channel < 1:
            raise ValueError(f"channel must be >= 1, got {self.channel}")
        if self.slot < 1:
            raise ValueError(f"slot must be >= 1, got {self.slot}")


@dataclass(frozen=True)
class Query:
    """A client request for an ordered set of distinct catalog items."""

    qid: int
    arrival_seq: int
    items: tuple[int, ...]

    def __post_init__(self):
        if self.qid < 1:
            raise ValueError("qid must be positive")
        if self.arrival_seq < 0:
            raise ValueError("arrival_seq must be non-negative")
        if not self.items:
            raise ValueError(f"query {self.qid} requests no items")
        if len(set(self.items)) != len(self.items):
            raise ValueError(f"query {self.qid} contains duplicate items")
        if any(d < 1 for d in self.items):
            raise ValueError(f"query {self.qid} has a non-positive item id")

    def __len__(self):
        return len(self.items)


def normalize_query(qid: int, arrival_seq: int, items) -> tuple[Query, int]:
    """Builds a Query, de-duplicating items while keeping first occurrence
    order.  Returns (query, number_of_duplicates_dropped)."""
    seen = []
    dropped = 0
    for d in items:
        if d in seen:
            dropped += 1
        else:
            seen.append(d)
    return Query(qid=qid, arrival_seq=arrival_seq, items=tuple(seen)), dropped


@dataclass(frozen=True)
class IndexEntry:
    """Index-channel entry: at its own slot it describes the contents of
    `described_slot`, two slots ahead (with wraparound), so a listening
    client has one slot to switch and still arrive in time."""

    described_slot: int
    listings: tuple[tuple[int, tuple[int, ...]], ...]  # (item, qids)

    def items(self) -> tuple[int, ...]:
        return tuple(item for item, _ in self.listings)


def described_slot_for(t: int, length: int) -> int:
    """Slot described by the index entry at slot t (1-based, cyclic).

    The entry looks two slots ahead; a wrapped result of 0 maps to the
    last slot so everything stays 1-based.
    """
    if t + 2 > length:
        s = (t + 2) % length
        return s if s != 0 else length
    return t + 2


@dataclass
class BroadcastSchedule:
    """Finalized broadcast layout: data grid, index channel, assignment.

    grid[(channel, slot)] -> item id; missing key means the cell is idle.
    assignment[(qid, item)] -> Position of the copy that query is expected
    to download (the canonical copy chosen by the scheduler).
    """

    channels: int
    length: int
    grid: dict[tuple[int, int], int]
    index_channel: dict[int, IndexEntry] = field(default_factory=dict)
    assignment: dict[tuple[int, int], Position] = field(default_factory=dict)
    _occ_cache: Optional[dict] = field(default=None, repr=False, compare=False)

    def item_at(self, channel: int, slot: int) -> Optional[int]:
        return self.grid.get((channel, slot))

    def occurrences(self, item: int) -> list[Position]:
        """All grid cells holding `item`, ordered by (slot, channel).
        Cached on first use; the grid must not change afterwards."""
        if self._occ_cache is None:
            cache: dict[int, list[Position]] = {}
            for (c, s), d in self.grid.items():
                cache.setdefault(d, []).append(Position(channel=c, slot=s))
            for positions in cache.values():
                positions.sort(key=lambda p: (p.slot, p.channel))
            self._occ_cache = cache
        return self._occ_cache.get(item, [])

    def slot_items(self, slot: int) -> set[int]:
        return {d for (c, s), d in self.grid.items() if s == slot}

    def assigned_position(self, qid: int, item: int) -> Position:
        try:
            return self.assignment[(qid, item)]
        except KeyError:
            raise ScheduleError(
                f"no assigned position for item {item} of query {qid}"
            ) from None

    def serialize(self) -> str:
        """Line-oriented text form: one line per channel, then the index
        channel.  Byte-stable for a fixed schedule."""
        lines = []
        for c in range(1, self.channels + 1):
            cells = []
            for s in range(1, self.length + 1):
                d = self.grid.get((c, s))
                cells.append(EMPTY_CELL if d is None else f"d{d}")
            lines.append(f"c{c}: " + CELL_SEP.join(cells))
        for s in range(1, self.length + 1):
            entry = self.index_channel.get(s)
            if entry is None:
                continue
            parts = [
                f"d{item}({CELL_SEP.join(f'q{q}' for q in qids)})"
                for item, qids in entry.listings
            ]
            lines.append(f"I{s}: {entry.described_slot}: " + CELL_SEP.join(parts))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Violation:
    """One conflicting item pair of one query."""

    qid: int
    item_a: int
    item_b: int
    pos_a: Position
    pos_b: Position

    @property
    def gap(self) -> int:
        return abs(self.pos_a.slot - self.pos_b.slot)


@dataclass(frozen=True)
class AccessStep:
    slot: int  # absolute slot, may exceed the cycle length
    channel: int
    item: int


@dataclass(frozen=True)
class AccessPlan:
    """A feasible download sequence for one query.

    Slots are absolute (monotone across cycle repetitions); the in-cycle
    slot of a step is ((slot - 1) % L) + 1.
    """

    tune_in_slot: int
    steps: tuple[AccessStep, ...]
    catch_slot: int  # absolute slot of the index entry that triggered tuning
    switches: int  # channel changes between consecutive downloads
    skips: int  # idle slots spent on-channel between downloads

    @property
    def first_download_slot(self) -> int:
        return self.steps[0].slot

    @property
    def completion_slot(self) -> int:
        return self.steps[-1].slot

    @property
    def latency(self) -> int:
        return self.completion_slot - self.tune_in_slot

    @property
    def wait(self) -> int:
        """Slots from tune-in until the first item is received."""
        return self.first_download_slot - self.tune_in_slot

    @property
    def occupied_slots(self) -> int:
        """Slots spanned from first to last download, inclusive."""
        return self.completion_slot - self.first_download_slot + 1


def check_conflict_free(schedule: BroadcastSchedule, queries) -> list[Violation]:
    """Exhaustive pairwise conflict scan over every query's assigned
    positions.  Returns all violations (empty list means conflict-free);
    raises ScheduleError if a requested item has no assignment."""
    violations = []
    for q in queries:
        positions = [(d, schedule.assigned_position(q.qid, d)) for d in q.items]
        for i in range(len(positions)):
            da, pa = positions[i]
            for j in range(i + 1, len(positions)):
                db, pb = positions[j]
                if pa.channel != pb.channel and abs(pa.slot - pb.slot) <= 1:
                    violations.append(
                        Violation(qid=q.qid, item_a=da, item_b=db, pos_a=pa, pos_b=pb)
                    )
    return violations


def span_access_time(schedule: BroadcastSchedule, query: Query) -> int:
    """Max minus min assigned slot over the query's items."""
    slots = [schedule.assigned_position(query.qid, d).slot for d in query.items]
    return max(slots) - min(slots)


def average_span(schedule: BroadcastSchedule, queries) -> Fraction:
    """Arithmetic mean of span_access_time over the batch, as an exact
    rational."""
    queries = list(queries)
    if not queries:
        raise ScheduleError("average_span of an empty query list")
    total = sum(span_access_time(schedule, q) for q in queries)
    return Fraction(total, len(queries))
