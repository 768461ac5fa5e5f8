"""Ground-truth engines for tiny instances.

brute_force_schedule enumerates conflict-free layouts exhaustively (with
up to two copies per item) and returns one minimizing the average span;
dp_optimal_retrieval is an exact dynamic program over retrieval states;
flat_baseline_schedule is a deliberately naive popularity layout used as
a comparison reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .mapper import build_index_channel
from .model import BroadcastSchedule, Position, Query, ScheduleError

MAX_COPIES = 2


class InfeasibleAtCap(Exception):
    """No conflict-free layout exists within the instance's length cap."""


@dataclass(frozen=True)
class TinyInstance:
    """An instance small enough for exhaustive search."""

    catalog_size: int
    queries: tuple[Query, ...]
    channels: int
    max_length: int

    def __post_init__(self):
        if self.catalog_size > 6:
            raise ValueError("tiny instance caps catalog at 6 items")
        if len(self.queries) > 4:
            raise ValueError("tiny instance caps queries at 4")
        if self.channels > 3:
            raise ValueError("tiny instance caps channels at 3")
        if self.max_length > 8:
            raise ValueError("tiny instance caps cycle length at 8")
        for q in self.queries:
            if any(d > self.catalog_size for d in q.items):
                raise ValueError(f"query {q.qid} requests an out-of-catalog item")


def _query_candidates(query: Query, channels: int, length: int):
    """All internally conflict-free position tuples for one query, sorted
    by span.  Positions within a tuple occupy distinct cells."""
    cells = [
        Position(channel=c, slot=s)
        for s in range(1, length + 1)
        for c in range(1, channels + 1)
    ]
    k = len(query.items)
    out = []

    def extend(chosen):
        if len(chosen) == k:
            slots = [p.slot for p in chosen]
            out.append((max(slots) - min(slots), tuple(chosen)))
            return
        for p in cells:
            if p in chosen:
                continue
            ok = True
            for prev in chosen:
                if prev.channel != p.channel and abs(prev.slot - p.slot) <= 1:
                    ok = False
                    break
            if ok:
                extend(chosen + [p])

    extend([])
    out.sort(key=lambda t: (t[0], t[1]))
    return out


def brute_force_schedule(
    instance: TinyInstance, max_copies: int = MAX_COPIES
) -> BroadcastSchedule:
    """Exhaustive branch-and-bound over per-query placements.

    Each query picks a conflict-free position tuple; tuples of different
    queries must agree on cell contents, and an item may occupy at most
    max_copies cells.  Minimizes total (hence average) span; the traversal
    order is deterministic, so ties resolve to the first optimum found.
    """
    queries = list(instance.queries)
    if not queries:
        raise ScheduleError("tiny instance has no queries")
    cand = {
        q.qid: _query_candidates(q, instance.channels, instance.max_length)
        for q in queries
    }
    for q in queries:
        if not cand[q.qid]:
            raise InfeasibleAtCap(f"query {q.qid} does not fit in the cap")
    # Most-constrained query first.
    queries.sort(key=lambda q: len(cand[q.qid]))
    min_span = {q.qid: cand[q.qid][0][0] for q in queries}

    best = {"total": None, "grid": None, "assign": None, "copies": None}

    def search(i, cell_item, item_cells, assign, partial):
        if best["total"] is not None:
            bound = partial + sum(min_span[q.qid] for q in queries[i:])
            if bound >= best["total"]:
                return
        if i == len(queries):
            best["total"] = partial
            best["grid"] = dict(cell_item)
            best["assign"] = dict(assign)
            best["copies"] = max(
                (len(v) for v in item_cells.values()), default=0
            )
            return
        q = queries[i]
        for span, positions in cand[q.qid]:
            if best["total"] is not None:
                if partial + span + sum(
                    min_span[r.qid] for r in queries[i + 1 :]
                ) >= best["total"]:
                    break  # candidates are span-sorted
            touched_cells = []
            touched_items = []
            ok = True
            for d, p in zip(q.items, positions):
                cell = (p.channel, p.slot)
                occupant = cell_item.get(cell)
                if occupant is not None and occupant != d:
                    ok = False
                    break
                cells_of = item_cells.setdefault(d, set())
                if cell not in cells_of and len(cells_of) >= max_copies:
                    ok = False
                    break
                if occupant is None:
                    cell_item[cell] = d
                    touched_cells.append(cell)
                if cell not in cells_of:
                    cells_of.add(cell)
                    touched_items.append((d, cell))
                assign[(q.qid, d)] = p
            if ok:
                search(i + 1, cell_item, item_cells, assign, partial + span)
            for cell in touched_cells:
                del cell_item[cell]
            for d, cell in touched_items:
                item_cells[d].discard(cell)

    search(0, {}, {}, {}, 0)
    if best["total"] is None:
        raise InfeasibleAtCap("no conflict-free layout within the length cap")

    grid = best["grid"]
    length = max(s for (_, s) in grid)
    schedule = BroadcastSchedule(
        channels=instance.channels, length=length, grid=dict(grid)
    )
    schedule.assignment = {
        k: Position(channel=p.channel, slot=min(p.slot, length))
        for k, p in best["assign"].items()
    }
    schedule.max_copies_used = best["copies"]
    build_index_channel(schedule, instance.queries)
    return schedule


def dp_optimal_retrieval(
    schedule: BroadcastSchedule, query: Query, tune_in_slot: int
) -> tuple[int, int]:
    """Minimal pure-retrieval latency for a query from tune_in_slot.

    Dynamic program over (absolute slot, channel, remaining-item subset);
    no index overhead is modeled: the client may start downloading at any
    occurrence from tune_in_slot on.  Returns (latency, switches) where
    latency is completion slot minus tune_in_slot and, among all
    minimal-latency plans, switches is minimal.
    """
    cycle = schedule.length
    items = list(query.items)
    occ = {}
    for i, d in enumerate(items):
        pos = schedule.occurrences(d)
        if not pos:
            raise ScheduleError(f"item {d} of query {query.qid} is not broadcast")
        occ[i] = [(p.channel, p.slot) for p in pos]
    full = (1 << len(items)) - 1

    @lru_cache(maxsize=None)
    def solve(mask, t, chan):
        # chan == 0: not yet tuned to a data channel (free placement)
        if mask == 0:
            return (t, 0)
        best = None
        for i in range(len(items)):
            if not mask & (1 << i):
                continue
            for ch, s in occ[i]:
                if chan == 0:
                    earliest = t
                    sw = 0
                else:
                    earliest = t + 1 if ch == chan else t + 2
                    sw = 0 if ch == chan else 1
                a = earliest + (s - earliest) % cycle
                comp, nsw = solve(mask & ~(1 << i), a, ch)
                res = (comp, nsw + sw)
                if best is None or res < best:
                    best = res
        return best

    comp, switches = solve(full, tune_in_slot, 0)
    return comp - tune_in_slot, switches


def flat_baseline_schedule(queries, channel_count: int) -> BroadcastSchedule:
    """Popularity-ordered flat layout: distinct items by descending
    frequency (item id breaks ties), laid out row-major across channels
    slot by slot.  A placement that would conflict with an already-placed
    item of a shared query is shifted one slot later on its channel until
    clean; vacated cells stay empty (the naivety is the point — this is a
    reference scheduler, not a competitor)."""
    queries = list(queries)
    if not queries:
        raise ScheduleError("empty query batch")
    freq: dict[int, int] = {}
    sharers: dict[int, set[int]] = {}
    for q in queries:
        for d in q.items:
            freq[d] = freq.get(d, 0) + 1
            for other in q.items:
                if other != d:
                    sharers.setdefault(d, set()).add(other)
    order = sorted(freq, key=lambda d: (-freq[d], d))
    placed: dict[int, Position] = {}
    used: set[tuple[int, int]] = set()
    cursor_slot, cursor_chan = 1, 1
    for d in order:
        while (cursor_chan, cursor_slot) in used:
            cursor_chan += 1
            if cursor_chan > channel_count:
                cursor_chan = 1
                cursor_slot += 1
        related = sharers.get(d, set())
        slot, chan = cursor_slot, cursor_chan
        while (chan, slot) in used or any(
            p.channel != chan and abs(p.slot - slot) <= 1
            for other in related
            if (p := placed.get(other)) is not None
        ):
            slot += 1
        placed[d] = Position(channel=chan, slot=slot)
        used.add((chan, slot))
        cursor_chan += 1
        if cursor_chan > channel_count:
            cursor_chan = 1
            cursor_slot += 1
    length = max(p.slot for p in placed.values())
    grid = {(p.channel, p.slot): d for d, p in placed.items()}
    schedule = BroadcastSchedule(channels=channel_count, length=length, grid=grid)
    for q in queries:
        for d in q.items:
            schedule.assignment[(q.qid, d)] = placed[d]
    build_index_channel(schedule, queries)
    return schedule
