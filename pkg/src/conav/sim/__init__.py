"""Deterministic tick simulator: actions, sensing, and episode runs."""

from conav.sim.engine import Simulation, run_episode
from conav.sim.trace import EpisodeTrace, TraceEvent
from conav.sim.types import (
    ACTION_KINDS,
    CLOSE,
    DEGRADED_BATTERY,
    LOOK_AROUND,
    MOVE_FORWARD,
    NOMINAL,
    OPEN,
    STOP,
    TURN_LEFT,
    TURN_RIGHT,
    ActionOutcome,
    AgentPose,
    AgentProfile,
    ConditionEvent,
    EpisodeState,
    IllegalAction,
    Observation,
    PrimitiveAction,
    SkillSet,
    VisibleEntity,
)

__all__ = [
    "ACTION_KINDS",
    "CLOSE",
    "DEGRADED_BATTERY",
    "LOOK_AROUND",
    "MOVE_FORWARD",
    "NOMINAL",
    "OPEN",
    "STOP",
    "TURN_LEFT",
    "TURN_RIGHT",
    "ActionOutcome",
    "AgentPose",
    "AgentProfile",
    "ConditionEvent",
    "EpisodeState",
    "EpisodeTrace",
    "IllegalAction",
    "Observation",
    "PrimitiveAction",
    "Simulation",
    "SkillSet",
    "TraceEvent",
    "VisibleEntity",
    "run_episode",
]
