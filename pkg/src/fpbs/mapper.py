"""Stage IV: map the finished tree onto the broadcast grid and build the
index channel.

Level k of the tree becomes slot k of the cycle.  A data node whose parent
is a data node inherits its parent's channel, so every branch stays on one
channel and a client following it never has to switch mid-branch; nodes
hanging below empty nodes go to any free channel (preferring the channel
of their nearest data ancestor).  Empty nodes occupy no grid cell.
"""

from __future__ import annotations

from .model import BroadcastSchedule, IndexEntry, Position, ScheduleError, described_slot_for
from .scheduler import FPStarTree, QueryTable, canonical_nodes


def schedule_mapping(
    tree: FPStarTree, table: QueryTable, channel_count: int, queries
) -> BroadcastSchedule:
    """Breadth-first traversal filling the grid level by level, then the
    canonical per-query assignment.  Raises ScheduleError if a level holds
    more data nodes than channels (a scheduler invariant breach)."""
    if channel_count < 1:
        raise ScheduleError("channel count must be >= 1")
    grid: dict[tuple[int, int], int] = {}
    handling = list(tree.root.children)
    slot = 1
    while handling:
        data_nodes = [n for n in handling if not n.is_empty]
        if len(data_nodes) > channel_count:
            raise ScheduleError(
                f"level {slot} holds {len(data_nodes)} data nodes "
                f"with only {channel_count} channels"
            )
        taken = set()
        deferred = []
        cursor = 1
        for node in data_nodes:
            parent = node.parent
            if parent.is_root:
                while cursor in taken:
                    cursor += 1
                node.channel = cursor
                taken.add(cursor)
            elif not parent.is_empty:
                # Sole direct data child: keep the parent's channel.
                node.channel = parent.channel
                taken.add(parent.channel)
            else:
                deferred.append(node)
        for node in deferred:
            anc = node.data_ancestor()
            preferred = anc.channel if anc is not None and anc.channel else 1
            if preferred in taken:
                preferred = next(
                    c for c in range(1, channel_count + 1) if c not in taken
                )
            node.channel = preferred
            taken.add(preferred)
        for node in data_nodes:
            grid[(node.channel, slot)] = node.item
        handling = [ch for n in handling for ch in n.children]
        slot += 1

    schedule = BroadcastSchedule(
        channels=channel_count, length=tree.height, grid=grid
    )
    for q in queries:
        for d, node in canonical_nodes(tree, q).items():
            schedule.assignment[(q.qid, d)] = Position(
                channel=node.channel, slot=node.slot
            )
    build_index_channel(schedule, queries)
    return schedule


def build_index_channel(schedule: BroadcastSchedule, queries) -> dict[int, IndexEntry]:
    """Index entry at slot t lists every item broadcast two slots ahead
    (with wraparound) together with the queries requesting it."""
    requesters: dict[int, list[int]] = {}
    for q in queries:
        for d in q.items:
            requesters.setdefault(d, []).append(q.qid)
    entries = {}
    for t in range(1, schedule.length + 1):
        described = described_slot_for(t, schedule.length)
        listings = []
        for c in range(1, schedule.channels + 1):
            item = schedule.item_at(c, described)
            if item is not None:
                listings.append((item, tuple(sorted(requesters.get(item, ())))))
        entries[t] = IndexEntry(described_slot=described, listings=tuple(listings))
    schedule.index_channel = entries
    return entries
