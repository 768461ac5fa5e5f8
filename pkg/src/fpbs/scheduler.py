"""Stages I-III of the broadcast scheduler: request statistics, tree
backbone construction, and accelerating-branch construction.

The tree maps depth to broadcast slot: a node at slot k will be broadcast
in slot k of the cycle.  The backbone holds exactly one copy of every
requested item; accelerating branches replicate items closer to the cycle
start so overlapping queries finish earlier.  Empty nodes consume a slot
of depth but no channel bandwidth; they give a listening client the slot
it needs to switch channels.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction

from .model import Query

RULE_REQUEST_NUMBER = "rn"
RULE_FREQUENCY = "fre"
RULES = (RULE_REQUEST_NUMBER, RULE_FREQUENCY)


class SchedulerError(Exception):
    pass


class Exhausted(Exception):
    """select_next_query found no row with unhandled items."""


# ---------------------------------------------------------------------------
# Stage I: statistics and sorting


@dataclass
class QueryRow:
    qid: int
    arrival_seq: int
    sorted_items: tuple[int, ...]  # full request, by descending item frequency
    unhandled: list[int] = field(default_factory=list)
    handled: list[int] = field(default_factory=list)
    initial_freq: Fraction = Fraction(0)
    # max-slot tracking over handled tree nodes, kept current by the tree
    max_slot: int = 0
    max_nodes: list = field(default_factory=list)

    def remaining_freq(self, item_freq) -> Fraction:
        if not self.unhandled:
            return Fraction(0)
        return Fraction(sum(item_freq[d] for d in self.unhandled), len(self.unhandled))


@dataclass
class QueryTable:
    rows: dict[int, QueryRow]
    item_freq: dict[int, int]
    item_qids: dict[int, list[int]]
    order: list[int]  # qids in arrival order

    def row(self, qid: int) -> QueryRow:
        return self.rows[qid]

    def queries_for(self, item: int) -> list[int]:
        return self.item_qids.get(item, [])


def statistic_and_sort(queries: list[Query]) -> QueryTable:
    """Counts per-item access frequencies over the batch and re-orders each
    query's items by descending frequency (stable, so equal-frequency items
    keep their requested order)."""
    if not queries:
        raise SchedulerError("empty query batch")
    item_freq: dict[int, int] = {}
    item_qids: dict[int, list[int]] = {}
    for q in queries:
        for d in q.items:
            item_freq[d] = item_freq.get(d, 0) + 1
            item_qids.setdefault(d, []).append(q.qid)
    rows = {}
    order = []
    for q in queries:
        if q.qid in rows:
            raise SchedulerError(f"duplicate qid {q.qid} in batch")
        sorted_items = tuple(
            sorted(q.items, key=lambda d: -item_freq[d])
        )  # stable: ties keep request order
        rows[q.qid] = QueryRow(
            qid=q.qid,
            arrival_seq=q.arrival_seq,
            sorted_items=sorted_items,
            unhandled=list(sorted_items),
            initial_freq=Fraction(sum(item_freq[d] for d in q.items), len(q.items)),
        )
        order.append(q.qid)
    return QueryTable(rows=rows, item_freq=item_freq, item_qids=item_qids, order=order)


def _selection_key(row: QueryRow, freq: Fraction, rule: str):
    # Larger is better; arrival breaks ties (earlier wins), then qid.
    if rule == RULE_REQUEST_NUMBER:
        return (len(row.unhandled), freq, -row.arrival_seq, -row.qid)
    if rule == RULE_FREQUENCY:
        return (freq, len(row.unhandled), -row.arrival_seq, -row.qid)
    raise SchedulerError(f"unknown ordering rule {rule!r}")


def select_next_query(table: QueryTable, rule: str) -> int:
    """Next query to handle under the given ordering rule.

    Request-Number-First: most unhandled items, then highest remaining
    average frequency, then earliest arrival.  Frequency-First swaps the
    first two criteria.
    """
    best_qid = None
    best_key = None
    for row in table.rows.values():
        if not row.unhandled:
            continue
        key = _selection_key(row, row.remaining_freq(table.item_freq), rule)
        if best_key is None or key > best_key:
            best_key = key
            best_qid = row.qid
    if best_qid is None:
        raise Exhausted("no query has unhandled items")
    return best_qid


def initial_order(table: QueryTable, rule: str) -> list[int]:
    """Queries sorted by the rule on their *initial* statistics (full
    request size and full-request average frequency)."""

    def key(qid):
        row = table.rows[qid]
        if rule == RULE_REQUEST_NUMBER:
            return (-len(row.sorted_items), -row.initial_freq, row.arrival_seq, qid)
        if rule == RULE_FREQUENCY:
            return (-row.initial_freq, -len(row.sorted_items), row.arrival_seq, qid)
        raise SchedulerError(f"unknown ordering rule {rule!r}")

    return sorted(table.order, key=key)


# ---------------------------------------------------------------------------
# The tree


class Node:
    __slots__ = ("item", "slot", "parent", "children", "backbone", "channel")

    def __init__(self, item, slot, parent=None, backbone=False):
        self.item = item  # None for an empty node
        self.slot = slot
        self.parent = parent
        self.children: list[Node] = []
        self.backbone = backbone
        self.channel = None  # assigned during schedule mapping

    @property
    def is_empty(self) -> bool:
        return self.item is None and self.parent is not None

    @property
    def is_root(self) -> bool:
        return self.parent is None

    def child_with_item(self, item):
        for ch in self.children:
            if ch.item == item:
                return ch
        return None

    def data_ancestor(self):
        """Nearest non-empty ancestor (may be the root)."""
        node = self.parent
        while node is not None and node.is_empty:
            node = node.parent
        return node

    def __repr__(self):
        tag = "ROOT" if self.is_root else ("EMPTY" if self.is_empty else f"d{self.item}")
        return f"<Node {tag}@{self.slot}>"


class FPStarTree:
    """Slot-indexed request tree: backbone plus accelerating branches."""

    def __init__(self, channels: int):
        if channels < 1:
            raise SchedulerError("channel count must be >= 1")
        self.channels = channels
        self.root = Node(None, 0)
        self.level_data_count: dict[int, int] = {}
        self.item_nodes: dict[int, list[Node]] = {}
        self.backbone_node: dict[int, Node] = {}
        self.backbone_height = 0
        # canonical construction paths: qid -> {item: node}
        self.accel_paths: dict[int, dict[int, Node]] = {}

    @property
    def height(self) -> int:
        """Deepest data slot; empty nodes are never leaves so this is the
        cycle length."""
        return max(self.level_data_count, default=0)

    def is_overloaded(self, slot: int) -> bool:
        return self.level_data_count.get(slot, 0) >= self.channels

    def _register(self, node: Node):
        self.level_data_count[node.slot] = self.level_data_count.get(node.slot, 0) + 1
        self.item_nodes.setdefault(node.item, []).append(node)

    def _unregister(self, node: Node):
        self.level_data_count[node.slot] -= 1
        if self.level_data_count[node.slot] == 0:
            del self.level_data_count[node.slot]
        self.item_nodes[node.item].remove(node)

    def attach(self, parent: Node, item: int, force_empty: bool, backbone: bool):
        """Creates a data node for `item` below `parent`, interposing an
        empty node when branching off a non-root parent (or when forced)
        and chaining further empty nodes past overloaded levels.

        Returns (data_node, [created empty nodes]).
        """
        walk = parent
        created_empties = []
        need_empty = force_empty or (bool(parent.children) and not parent.is_root)
        if need_empty:
            e = Node(None, walk.slot + 1, parent=walk)
            walk.children.append(e)
            created_empties.append(e)
            walk = e
        while self.is_overloaded(walk.slot + 1):
            e = Node(None, walk.slot + 1, parent=walk)
            walk.children.append(e)
            created_empties.append(e)
            walk = e
        node = Node(item, walk.slot + 1, parent=walk, backbone=backbone)
        walk.children.append(node)
        self._register(node)
        return node, created_empties

    def remove_path(self, data_node: Node, empties: list[Node]):
        """Removes a just-created data node and its chain of just-created
        empty ancestors."""
        self._unregister(data_node)
        data_node.parent.children.remove(data_node)
        for e in reversed(empties):
            if not e.children:
                e.parent.children.remove(e)

    def nodes_with_item_between(self, item: int, lo: int, hi: int, exclude=None):
        return [
            n
            for n in self.item_nodes.get(item, [])
            if lo <= n.slot <= hi and n is not exclude
        ]

    def serialize(self) -> str:
        """Indented per-level text dump, stable across runs."""
        lines = []

        def walk(node, depth):
            if not node.is_root:
                token = "EMPTY" if node.is_empty else f"d{node.item}"
                flag = "*" if node.backbone else ""
                lines.append("  " * (depth - 1) + f"{node.slot}:{token}{flag}")
            for ch in node.children:
                walk(ch, depth + 1)

        walk(self.root, 0)
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Stage II: backbone


def _mark_handled(tree: FPStarTree, table: QueryTable, item: int, node: Node):
    for qid in table.queries_for(item):
        row = table.rows[qid]
        if item in row.unhandled:
            row.unhandled.remove(item)
            row.handled.append(item)
        if node.slot > row.max_slot:
            row.max_slot = node.slot
            row.max_nodes = [node]
        elif node.slot == row.max_slot:
            row.max_nodes.append(node)


def _backbone_parent(tree: FPStarTree, table: QueryTable, item: int):
    """Parent for a backbone insertion: among tree nodes of already-handled
    items of queries that also request `item`, the one with the maximum
    slot.  When several distinct nodes tie at the maximum, the new item is
    forced behind an empty node so it lands at least two slots below all
    of them (a direct child would sit one slot after a same-slot node on
    another channel).  Slot ties pick the smallest item id as parent."""
    best_slot = 0
    candidates: list[Node] = []
    for qid in table.queries_for(item):
        row = table.rows[qid]
        if row.max_slot < best_slot or not row.max_nodes:
            continue
        if row.max_slot > best_slot:
            best_slot = row.max_slot
            candidates = list(row.max_nodes)
        else:
            candidates.extend(row.max_nodes)
    if not candidates:
        return tree.root, False
    unique = {id(n): n for n in candidates}
    nodes = list(unique.values())
    if len(nodes) == 1:
        return nodes[0], False
    parent = min(nodes, key=lambda n: n.item)
    return parent, True


def create_backbone(table: QueryTable, channel_count: int) -> FPStarTree:
    """Builds the backbone: one copy of every requested item, queries
    handled Request-Number-First, each item attached under the deepest
    already-placed item of any query sharing it."""
    tree = FPStarTree(channel_count)

    # Lazy max-heap over (count, remaining freq, arrival); entries go stale
    # when another query's insertion removes items from a row.
    def entry(row):
        freq = row.remaining_freq(table.item_freq)
        return (-len(row.unhandled), -freq, row.arrival_seq, row.qid)

    heap = [entry(r) for r in table.rows.values()]
    heapq.heapify(heap)

    first = True
    while heap:
        cand = heapq.heappop(heap)
        row = table.rows[cand[3]]
        if not row.unhandled:
            continue
        cur = entry(row)
        if cur != cand:
            heapq.heappush(heap, cur)
            continue
        if first:
            # Initial root path: the whole first query in sorted order.
            walk = tree.root
            for d in row.sorted_items:
                node, _ = tree.attach(walk, d, force_empty=False, backbone=True)
                _mark_handled(tree, table, d, node)
                walk = node
            first = False
        else:
            for d in list(row.unhandled):
                if d in tree.item_nodes:
                    continue  # placed for another query since selection
                parent, forced = _backbone_parent(tree, table, d)
                node, _ = tree.attach(parent, d, force_empty=forced, backbone=True)
                _mark_handled(tree, table, d, node)
    for d, nodes in tree.item_nodes.items():
        tree.backbone_node[d] = nodes[0]
    tree.backbone_height = tree.height
    return tree


# ---------------------------------------------------------------------------
# Stage III: accelerating branches


def range_search(tree: FPStarTree, candidate: Node, created_empties=None):
    """Validates a tentatively inserted data node.

    Scans the slot window from just above the candidate's empty-ancestor
    chain down to one slot past the candidate for another copy of the same
    item.  A hit means the candidate buys nothing (the existing copy is
    reachable instead), so the candidate and its chain are deleted and the
    existing node returned; otherwise the candidate stands.  The window is
    widened to always cover the candidate's own slot so no slot ever
    carries two copies of one item.
    """
    if created_empties is None:
        created_empties = _empty_chain(candidate)
    num_e = len(created_empties)
    lo = min(candidate.slot, candidate.slot - num_e + 1)
    hi = candidate.slot + 1
    found = tree.nodes_with_item_between(candidate.item, lo, hi, exclude=candidate)
    if found:
        found.sort(key=lambda n: (n.slot, not n.backbone))
        tree.remove_path(candidate, created_empties)
        return found[0]
    return candidate


def _empty_chain(node: Node) -> list[Node]:
    chain = []
    walk = node.parent
    while walk is not None and walk.is_empty:
        chain.append(walk)
        walk = walk.parent
    chain.reverse()
    return chain


def create_accelerating_branch(
    tree: FPStarTree, table: QueryTable, rule: str
) -> FPStarTree:
    """Adds accelerating branches: queries in rule order retrace their item
    lists from the root, replicating items onto new branches whenever the
    existing copy is too deep to help.  A query whose path cannot stay
    within the backbone height is rolled back entirely and falls back to
    its backbone copies."""
    height = tree.backbone_height or tree.height
    for qid in initial_order(table, rule):
        row = table.rows[qid]
        curr = tree.root
        path: dict[int, Node] = {}
        created: list[tuple[Node, list[Node]]] = []
        failed = False
        for d in row.sorted_items:
            existing = curr.child_with_item(d)
            if existing is not None:
                curr = existing
            else:
                prev = curr
                cand, empties = tree.attach(curr, d, force_empty=False, backbone=False)
                result = range_search(tree, cand, empties)
                if result is cand:
                    created.append((cand, empties))
                elif result.slot <= prev.slot + 1:
                    # Same-item copy right at the candidate's own slot: it
                    # sits one slot after the previous path node, possibly
                    # on another channel, so the path cannot use it.
                    for node, node_empties in reversed(created):
                        tree.remove_path(node, node_empties)
                    failed = True
                    break
                curr = result
            path[d] = curr
            if curr.slot > height:
                for node, empties in reversed(created):
                    tree.remove_path(node, empties)
                failed = True
                break
        if not failed:
            tree.accel_paths[qid] = path
    return tree


def canonical_nodes(tree: FPStarTree, query: Query) -> dict[int, Node]:
    """The tree node each item of `query` should be downloaded from: the
    stage-III path when the query got one, else its backbone copies."""
    path = tree.accel_paths.get(query.qid)
    if path is not None and all(d in path for d in query.items):
        return {d: path[d] for d in query.items}
    return {d: tree.backbone_node[d] for d in query.items}
