from fractions import Fraction

import pytest

from fpbs import Query
from fpbs.scheduler import (
    RULE_FREQUENCY,
    RULE_REQUEST_NUMBER,
    Exhausted,
    SchedulerError,
    create_accelerating_branch,
    create_backbone,
    initial_order,
    select_next_query,
    statistic_and_sort,
)


def test_statistics_on_worked_example(example_queries):
    table = statistic_and_sort(example_queries)
    assert table.item_freq == {1: 2, 2: 3, 3: 3, 4: 2, 5: 3, 6: 1, 7: 1, 8: 1}
    assert table.rows[1].sorted_items == (2, 5, 7)
    assert table.rows[4].sorted_items == (3, 5, 1, 4)
    assert table.rows[5].sorted_items == (3, 1, 6)
    assert table.rows[2].initial_freq == Fraction(8, 3)
    assert table.rows[4].initial_freq == Fraction(5, 2)


def test_statistics_rejects_empty_and_duplicate_qids():
    with pytest.raises(SchedulerError):
        statistic_and_sort([])
    qs = [Query(1, 1, (1,)), Query(1, 2, (2,))]
    with pytest.raises(SchedulerError):
        statistic_and_sort(qs)


def test_select_next_query_orderings(example_queries):
    table = statistic_and_sort(example_queries)
    # Request-Number-First: q4 has four items.
    assert select_next_query(table, RULE_REQUEST_NUMBER) == 4
    # Frequency-First: q2 has the highest average frequency 8/3.
    assert select_next_query(table, RULE_FREQUENCY) == 2


def test_select_next_query_arrival_tiebreak():
    qs = [Query(1, 5, (1, 2)), Query(2, 3, (1, 2))]
    table = statistic_and_sort(qs)
    # identical size and frequency: earlier arrival_seq wins
    assert select_next_query(table, RULE_REQUEST_NUMBER) == 2


def test_select_next_query_exhausted():
    table = statistic_and_sort([Query(1, 1, (1,))])
    table.rows[1].unhandled.clear()
    with pytest.raises(Exhausted):
        select_next_query(table, RULE_REQUEST_NUMBER)


def test_initial_order_frequency_first(example_queries):
    table = statistic_and_sort(example_queries)
    assert initial_order(table, RULE_FREQUENCY) == [2, 4, 1, 3, 5]
    assert initial_order(table, RULE_REQUEST_NUMBER)[0] == 4


def test_backbone_worked_example(example_queries):
    table = statistic_and_sort(example_queries)
    tree = create_backbone(table, 2)
    # one copy per distinct item
    assert sorted(tree.item_nodes) == [1, 2, 3, 4, 5, 6, 7, 8]
    assert all(len(v) == 1 for v in tree.item_nodes.values())
    slots = {d: tree.backbone_node[d].slot for d in tree.backbone_node}
    assert slots == {3: 1, 5: 2, 1: 3, 4: 4, 2: 5, 7: 6, 8: 7, 6: 5}
    # spine parentage d3 -> d5 -> d1 -> d4 -> d2 -> d7
    assert tree.backbone_node[5].parent is tree.backbone_node[3]
    assert tree.backbone_node[1].parent is tree.backbone_node[5]
    assert tree.backbone_node[4].parent is tree.backbone_node[1]
    assert tree.backbone_node[2].parent is tree.backbone_node[4]
    assert tree.backbone_node[7].parent is tree.backbone_node[2]
    # d8 sits below d2 via one empty node, d6 below d1 via one empty node
    d8 = tree.backbone_node[8]
    assert d8.parent.is_empty and d8.parent.parent is tree.backbone_node[2]
    d6 = tree.backbone_node[6]
    assert d6.parent.is_empty and d6.parent.parent is tree.backbone_node[1]
    assert tree.backbone_height == 7


def test_level_capacity_respected(example_queries):
    table = statistic_and_sort(example_queries)
    tree = create_backbone(table, 2)
    create_accelerating_branch(tree, table, RULE_FREQUENCY)
    for slot, count in tree.level_data_count.items():
        assert count <= 2, f"slot {slot} overloaded"


def test_accelerating_branch_worked_example(example_queries):
    table = statistic_and_sort(example_queries)
    tree = create_backbone(table, 2)
    create_accelerating_branch(tree, table, RULE_FREQUENCY)
    accel = {
        d: [n for n in nodes if not n.backbone]
        for d, nodes in tree.item_nodes.items()
    }
    accel = {d: v for d, v in accel.items() if v}
    # replicas: d2@1, d3@2, d5@3, d7@4; d4 and d8 were rejected
    assert {d: [n.slot for n in v] for d, v in accel.items()} == {
        2: [1],
        3: [2],
        5: [3],
        7: [4],
    }
    # d5 hangs below d2's branch via an empty node at slot 2
    d5 = accel[5][0]
    assert d5.parent.is_empty and d5.parent.parent is accel[2][0]
    # q2's path ends on the backbone copy of d4 (replication was illegal)
    assert tree.accel_paths[2][4] is tree.backbone_node[4]
    # q4 follows the backbone spine untouched
    assert all(tree.accel_paths[4][d].backbone for d in (3, 5, 1, 4))


def test_accel_never_exceeds_backbone_height(example_queries):
    table = statistic_and_sort(example_queries)
    tree = create_backbone(table, 2)
    create_accelerating_branch(tree, table, RULE_FREQUENCY)
    assert tree.height == tree.backbone_height


def test_single_query_chain():
    qs = [Query(1, 1, (4, 9, 2))]
    table = statistic_and_sort(qs)
    tree = create_backbone(table, 3)
    # all frequencies equal: request order is kept, one chain, no empties
    assert [tree.backbone_node[d].slot for d in (4, 9, 2)] == [1, 2, 3]
