import pytest

from fpbs import Query
from fpbs.mapper import build_index_channel, schedule_mapping
from fpbs.model import check_conflict_free
from fpbs.scheduler import (
    RULE_FREQUENCY,
    create_accelerating_branch,
    create_backbone,
    statistic_and_sort,
)


def build(example_queries, channels=2, rule=RULE_FREQUENCY):
    table = statistic_and_sort(example_queries)
    tree = create_backbone(table, channels)
    create_accelerating_branch(tree, table, rule)
    return tree, table, schedule_mapping(tree, table, channels, example_queries)


def test_worked_example_slot_occupancy(example_queries):
    _, _, schedule = build(example_queries)
    expected = {
        1: {3, 2},
        2: {5, 3},
        3: {1, 5},
        4: {4, 7},
        5: {2, 6},
        6: {7},
        7: {8},
    }
    assert schedule.length == 7
    for slot, items in expected.items():
        assert schedule.slot_items(slot) == items, f"slot {slot}"


def test_worked_example_index_rule(example_queries):
    _, _, schedule = build(example_queries)
    assert schedule.index_channel[1].described_slot == 3
    assert schedule.index_channel[5].described_slot == 7
    assert schedule.index_channel[6].described_slot == 1
    assert schedule.index_channel[7].described_slot == 2
    # the entry for slot 1 lists both items there with their requesters
    listed = dict(schedule.index_channel[6].listings)
    assert listed[3] == (2, 4, 5)
    assert listed[2] == (1, 2, 3)


def test_branch_channel_continuity(example_queries):
    tree, _, _ = build(example_queries)

    def walk(node):
        for child in node.children:
            if (
                not node.is_root
                and not node.is_empty
                and not child.is_empty
            ):
                assert child.channel == node.channel
            walk(child)

    walk(tree.root)


def test_assignment_is_conflict_free(example_queries):
    _, _, schedule = build(example_queries)
    assert check_conflict_free(schedule, example_queries) == []


def test_every_requested_item_assigned(example_queries):
    _, _, schedule = build(example_queries)
    for q in example_queries:
        for d in q.items:
            pos = schedule.assigned_position(q.qid, d)
            assert schedule.item_at(pos.channel, pos.slot) == d


def test_index_entries_cover_whole_cycle(example_queries):
    _, _, schedule = build(example_queries)
    assert sorted(schedule.index_channel) == list(range(1, schedule.length + 1))
    described = sorted(e.described_slot for e in schedule.index_channel.values())
    assert described == list(range(1, schedule.length + 1))


def test_build_index_channel_skips_unrequested_items(example_queries):
    _, _, schedule = build(example_queries)
    for entry in schedule.index_channel.values():
        for item, qids in entry.listings:
            assert qids, f"item {item} listed with no requesters"
