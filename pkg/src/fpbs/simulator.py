"""Client access simulation and the offline/online experiment drivers.

A client tunes into the index channel at some slot, waits for the first
entry announcing an item it needs, switches (one slot) and arrives exactly
at the described slot, then retrieves greedily: always the occurrence with
the smallest feasible slot, where a download at (t, c) allows slot t+1 on
the same channel but only t+2 on any other.  The schedule repeats
back-to-back, so slots here are absolute and wrap through the cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .mapper import schedule_mapping
from .model import (
    AccessPlan,
    AccessStep,
    BroadcastSchedule,
    Query,
    ScheduleError,
    check_conflict_free,
    span_access_time,
)
from .retrieval import greedy_retrieve
from .scheduler import (
    RULE_REQUEST_NUMBER,
    create_accelerating_branch,
    create_backbone,
    statistic_and_sort,
)


def fpbs_schedule(queries, channel_count: int, rule: str):
    """Full pipeline: statistics, backbone, accelerating branches, mapping.
    The backbone is always built Request-Number-First; `rule` only orders
    the accelerating-branch pass.  Returns (table, tree, schedule)."""
    table = statistic_and_sort(queries)
    tree = create_backbone(table, channel_count)
    create_accelerating_branch(tree, table, rule)
    schedule = schedule_mapping(tree, table, channel_count, queries)
    return table, tree, schedule


def simulate_query(
    schedule: BroadcastSchedule, query: Query, tune_in_slot: int
) -> AccessPlan:
    """One client session: index listening, arrival, greedy retrieval."""
    cycle = schedule.length
    needed = list(query.items)
    occs = {}
    for d in needed:
        pos = schedule.occurrences(d)
        if not pos:
            raise ScheduleError(f"item {d} of query {query.qid} is not broadcast")
        occs[d] = pos
    needed_set = set(needed)

    # Candidate catch points: every index slot announcing a needed item
    # within one cycle of the first such announcement (the client knows
    # the whole index after a cycle of listening, so it may let an early
    # announcement pass if a later one finishes the retrieval sooner).
    candidates = []  # (catch_abs, first_chan, first_item)
    first_t = None
    for off in range(2 * cycle):
        t_abs = tune_in_slot + off
        if first_t is not None and t_abs >= first_t + cycle:
            break
        entry = schedule.index_channel[(t_abs - 1) % cycle + 1]
        if not needed_set.intersection(entry.items()):
            continue
        if first_t is None:
            first_t = t_abs
        for c in range(1, schedule.channels + 1):
            item = schedule.item_at(c, entry.described_slot)
            if item in needed_set:
                candidates.append((t_abs, c, item))
    if not candidates:
        raise ScheduleError(
            f"index channel never announces any item of query {query.qid}"
        )

    occ_ptr = [0]
    occ_slot = []
    occ_chan = []
    for d in needed:
        for p in occs[d]:
            occ_slot.append(p.slot)
            occ_chan.append(p.channel)
        occ_ptr.append(len(occ_slot))

    # The client minimizes its active retrieval window (slots from first
    # to last download), then channel switches, then overall completion:
    # staying idle on the index channel is cheap, re-tuning is not.
    best = None
    for catch_abs, first_chan, first_item in candidates:
        arrival = catch_abs + 2
        items, slots, chans, switches, skips = greedy_retrieve(
            occ_ptr,
            occ_slot,
            occ_chan,
            needed.index(first_item),
            arrival,
            first_chan,
            cycle,
        )
        completion = slots[-1] if slots else arrival
        steps = [AccessStep(slot=arrival, channel=first_chan, item=first_item)]
        steps.extend(
            AccessStep(slot=s, channel=c, item=needed[i])
            for i, s, c in zip(items, slots, chans)
        )
        key = (completion - arrival, switches, completion, first_chan)
        if best is None or key < best[0]:
            best = (key, catch_abs, tuple(steps), switches, skips)

    canonical = _canonical_plan(schedule, query, tune_in_slot)
    if canonical is not None and (best is None or canonical[0] < best[0]):
        best = canonical

    _, catch_abs, steps, switches, skips = best
    return AccessPlan(
        tune_in_slot=tune_in_slot,
        steps=steps,
        catch_slot=catch_abs,
        switches=switches,
        skips=skips,
    )


def _canonical_plan(schedule, query, tune_in_slot):
    """Fallback plan that downloads the scheduler-designated copy of every
    item in slot order within a single cycle pass.  Conflict-freedom makes
    consecutive downloads feasible, so this plan's active window never
    exceeds the cycle length.  Returns (key, catch, steps, switches, skips)
    in the same shape the greedy candidates use, or None if the assignment
    is unavailable or (because of a conflict) infeasible."""
    cycle = schedule.length
    try:
        positions = sorted(
            ((schedule.assigned_position(query.qid, d), d) for d in query.items),
            key=lambda t: (t[0].slot, t[0].channel),
        )
    except ScheduleError:
        return None
    prev = None
    for pos, _ in positions:
        if prev is not None:
            gap = 1 if pos.channel == prev.channel else 2
            if pos.slot - prev.slot < gap:
                return None
        prev = pos
    s0 = positions[0][0].slot
    t0 = (s0 - 3) % cycle + 1  # index slot whose entry describes s0
    catch_abs = tune_in_slot + (t0 - tune_in_slot) % cycle
    arrival = catch_abs + 2
    steps = []
    switches = 0
    skips = 0
    prev = None
    for pos, d in positions:
        slot_abs = arrival + (pos.slot - s0)
        steps.append(AccessStep(slot=slot_abs, channel=pos.channel, item=d))
        if prev is not None:
            if pos.channel != prev.channel:
                switches += 1
                skips += pos.slot - prev.slot - 2
            else:
                skips += pos.slot - prev.slot - 1
        prev = pos
    completion = steps[-1].slot
    key = (completion - arrival, switches, completion, steps[0].channel)
    return (key, catch_abs, tuple(steps), switches, skips)


@dataclass
class QueryExpectation:
    """Exact uniform-tune-in expectations for one query on one schedule."""

    qid: int
    expected_latency: Fraction
    expected_access: Fraction  # mean occupied window, first to last download
    expected_wait: Fraction
    expected_switches: Fraction
    expected_skips: Fraction
    span: int
    max_retrieval_stretch: int  # worst completion - first download over tune-ins


def expect_query(schedule: BroadcastSchedule, query: Query) -> QueryExpectation:
    """Averages simulate_query over all L tune-in slots.

    Every tune-in slot maps to the next index slot announcing a needed
    item, and the retrieval after that catch depends only on the catch
    slot, so one simulation per announcing slot is enough.
    """
    cycle = schedule.length
    needed = set(query.items)
    announcing = [
        t
        for t in range(1, cycle + 1)
        if needed.intersection(schedule.index_channel[t].items())
    ]
    if not announcing:
        raise ScheduleError(f"query {query.qid} has no announced items")
    plans = {t: simulate_query(schedule, query, t) for t in announcing}

    total_latency = 0
    total_access = 0
    total_wait = 0
    total_switches = 0
    total_skips = 0
    stretch = 0
    for t0 in range(1, cycle + 1):
        dist = min((t - t0) % cycle for t in announcing)
        t = (t0 + dist - 1) % cycle + 1
        plan = plans[t]
        total_latency += dist + plan.latency
        total_access += plan.completion_slot - plan.first_download_slot + 1
        total_wait += dist + plan.wait
        total_switches += plan.switches
        total_skips += plan.skips
        stretch = max(stretch, plan.completion_slot - plan.first_download_slot)
    return QueryExpectation(
        qid=query.qid,
        expected_latency=Fraction(total_latency, cycle),
        expected_access=Fraction(total_access, cycle),
        expected_wait=Fraction(total_wait, cycle),
        expected_switches=Fraction(total_switches, cycle),
        expected_skips=Fraction(total_skips, cycle),
        span=span_access_time(schedule, query),
        max_retrieval_stretch=stretch,
    )


def expected_access_time(schedule: BroadcastSchedule, queries):
    """Per-query expectations plus the grand mean latency."""
    per_query = {q.qid: expect_query(schedule, q) for q in queries}
    if per_query:
        grand = sum(e.expected_latency for e in per_query.values()) / len(per_query)
    else:
        grand = Fraction(0)
    return per_query, grand


@dataclass
class QueryOutcome:
    qid: int
    arrival_seq: int
    batch_wait: int  # slots from arrival to the serving cycle's start
    access: Fraction  # expected occupied window (first to last download)
    span: int
    switches: Fraction
    skips: Fraction
    wait: Fraction  # expected tune-in wait within the cycle
    max_retrieval_stretch: int
    cycle_length: int

    @property
    def latency(self) -> Fraction:
        # wait counts tune-in to first download inclusive, access counts
        # first to last download inclusive; the shared slot appears once.
        return self.batch_wait + self.wait + self.access - 1


@dataclass
class ExperimentReport:
    config: dict
    per_query: dict[int, QueryOutcome]
    conflict_count: int
    cycle_lengths: list[int]
    distinct_items: int
    schedules: list[BroadcastSchedule] = field(default_factory=list)
    batches: list[list[Query]] = field(default_factory=list)

    @property
    def mean_latency(self) -> Fraction:
        rows = list(self.per_query.values())
        return sum((r.latency for r in rows), Fraction(0)) / len(rows)

    @property
    def mean_access(self) -> Fraction:
        rows = list(self.per_query.values())
        return sum((r.access for r in rows), Fraction(0)) / len(rows)

    @property
    def mean_span(self) -> Fraction:
        rows = list(self.per_query.values())
        return Fraction(sum(r.span for r in rows), len(rows))

    def percentile(self, p: float) -> float:
        values = sorted(float(r.latency) for r in self.per_query.values())
        if not values:
            return 0.0
        k = (len(values) - 1) * p / 100.0
        lo = int(k)
        hi = min(lo + 1, len(values) - 1)
        return values[lo] + (values[hi] - values[lo]) * (k - lo)


def _outcomes_for_batch(schedule, batch, cycle_start, arrival_slots):
    per_query, _ = expected_access_time(schedule, batch)
    out = {}
    for q in batch:
        e = per_query[q.qid]
        out[q.qid] = QueryOutcome(
            qid=q.qid,
            arrival_seq=q.arrival_seq,
            batch_wait=cycle_start - arrival_slots.get(q.qid, cycle_start),
            access=e.expected_access,
            span=e.span,
            switches=e.expected_switches,
            skips=e.expected_skips,
            wait=e.expected_wait,
            max_retrieval_stretch=e.max_retrieval_stretch,
            cycle_length=schedule.length,
        )
    return out


def run_offline(
    queries, channel_count: int, rule: str, with_expectations: bool = True
) -> ExperimentReport:
    """One pipeline pass over the whole batch, then exact expected access
    times under uniform tune-in (skipped when with_expectations is False;
    the report then only carries the schedule and conflict scan)."""
    queries = list(queries)
    _, _, schedule = fpbs_schedule(queries, channel_count, rule)
    violations = check_conflict_free(schedule, queries)
    outcomes = (
        _outcomes_for_batch(schedule, queries, 0, {}) if with_expectations else {}
    )
    return ExperimentReport(
        config={"mode": "offline", "channels": channel_count, "rule": rule},
        per_query=outcomes,
        conflict_count=len(violations),
        cycle_lengths=[schedule.length],
        distinct_items=len({d for q in queries for d in q.items}),
        schedules=[schedule],
        batches=[queries],
    )


def run_online(
    arrivals,
    buffer_capacity: int,
    channel_count: int,
    rule: str,
    with_expectations: bool = True,
) -> ExperimentReport:
    """FCFS buffered scheduling: a batch is cut whenever the buffer fills
    (or the stream ends), scheduled into one cycle, and broadcast while
    later arrivals queue up for the next batch.  A query's latency counts
    its wait for the cycle start plus its expected in-cycle access time.

    `arrivals` is a list of (query, arrival_slot) in arrival order.
    """
    if buffer_capacity < 1:
        raise ScheduleError("buffer capacity must be >= 1")
    arrivals = list(arrivals)
    arrival_slots = {q.qid: slot for q, slot in arrivals}
    outcomes: dict[int, QueryOutcome] = {}
    conflicts = 0
    cycle_lengths = []
    schedules = []
    batches = []

    pending: list[Query] = []
    idx = 0
    now = 0
    while idx < len(arrivals) or pending:
        while idx < len(arrivals) and arrivals[idx][1] <= now:
            pending.append(arrivals[idx][0])
            idx += 1
        if len(pending) >= buffer_capacity:
            batch, pending = pending[:buffer_capacity], pending[buffer_capacity:]
        elif idx >= len(arrivals):
            batch, pending = pending, []
        else:
            # Idle until the buffer would fill (or the stream ends).
            shortfall = buffer_capacity - len(pending)
            j = min(idx + shortfall - 1, len(arrivals) - 1)
            now = max(now, arrivals[j][1])
            continue
        _, _, schedule = fpbs_schedule(batch, channel_count, rule)
        conflicts += len(check_conflict_free(schedule, batch))
        if with_expectations:
            outcomes.update(_outcomes_for_batch(schedule, batch, now, arrival_slots))
        cycle_lengths.append(schedule.length)
        schedules.append(schedule)
        batches.append(batch)
        now += schedule.length
    return ExperimentReport(
        config={
            "mode": "online",
            "channels": channel_count,
            "rule": rule,
            "buffer": buffer_capacity,
        },
        per_query=outcomes,
        conflict_count=conflicts,
        cycle_lengths=cycle_lengths,
        distinct_items=len({d for q, _ in arrivals for d in q.items}),
        schedules=schedules,
        batches=batches,
    )
