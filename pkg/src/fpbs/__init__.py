"""Conflict-avoiding multi-channel broadcast scheduling.

Pipeline: request statistics -> tree backbone -> accelerating branches ->
grid mapping with an index channel, plus a client access simulator and
exhaustive ground-truth engines for validation.
"""

from .model import (
    AccessPlan,
    AccessStep,
    BroadcastSchedule,
    IndexEntry,
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
from .scheduler import (
    RULE_FREQUENCY,
    RULE_REQUEST_NUMBER,
    RULES,
    FPStarTree,
    QueryTable,
    SchedulerError,
    canonical_nodes,
    create_accelerating_branch,
    create_backbone,
    initial_order,
    range_search,
    select_next_query,
    statistic_and_sort,
)
from .mapper import build_index_channel, schedule_mapping
from .retrieval import BACKEND as RETRIEVAL_BACKEND
from .simulator import (
    ExperimentReport,
    QueryExpectation,
    QueryOutcome,
    expect_query,
    expected_access_time,
    fpbs_schedule,
    run_offline,
    run_online,
    simulate_query,
)
from .oracle import (
    InfeasibleAtCap,
    TinyInstance,
    brute_force_schedule,
    dp_optimal_retrieval,
    flat_baseline_schedule,
)

__version__ = "0.1.0"

__all__ = [
    "AccessPlan",
    "AccessStep",
    "BroadcastSchedule",
    "ExperimentReport",
    "FPStarTree",
    "IndexEntry",
    "InfeasibleAtCap",
    "Position",
    "Query",
    "QueryExpectation",
    "QueryOutcome",
    "QueryTable",
    "RETRIEVAL_BACKEND",
    "RULES",
    "RULE_FREQUENCY",
    "RULE_REQUEST_NUMBER",
    "ScheduleError",
    "SchedulerError",
    "TinyInstance",
    "Violation",
    "average_span",
    "brute_force_schedule",
    "build_index_channel",
    "canonical_nodes",
    "check_conflict_free",
    "create_accelerating_branch",
    "create_backbone",
    "described_slot_for",
    "dp_optimal_retrieval",
    "expect_query",
    "expected_access_time",
    "flat_baseline_schedule",
    "fpbs_schedule",
    "initial_order",
    "normalize_query",
    "range_search",
    "run_offline",
    "run_online",
    "schedule_mapping",
    "select_next_query",
    "simulate_query",
    "span_access_time",
    "statistic_and_sort",
]
