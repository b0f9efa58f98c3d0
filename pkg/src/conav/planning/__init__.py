"""Decentralized planning: strategies, local plans, execution, stacks."""

from conav.planning.action import Executor
from conav.planning.local import (
    Feedback,
    StepPlan,
    Summary,
    coarse_vantages,
    fine_landings,
    mopup_targets,
    nearest_passable_in_room,
    room_docket,
    uncovered_fine,
)
from conav.planning.stack import PlannerStack, make_stack_factory
from conav.planning.strategy import CollabStrategy, elect_strategist

__all__ = [
    "CollabStrategy",
    "Executor",
    "Feedback",
    "PlannerStack",
    "StepPlan",
    "Summary",
    "coarse_vantages",
    "elect_strategist",
    "fine_landings",
    "make_stack_factory",
    "mopup_targets",
    "nearest_passable_in_room",
    "room_docket",
    "uncovered_fine",
]
