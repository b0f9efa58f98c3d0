"""Tunable defaults shared by world generation, the simulator, and the planners.

Detection ranges are baked into generated datasets (object placement is
validated against them), so changing them invalidates shipped episode files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# Perception (cells, Chebyshev distance).
DETECT_RANGE_NORMAL = 8
DETECT_RANGE_SMALL_HI = 6   # with a high-resolution camera
DETECT_RANGE_SMALL_LO = 1   # adjacent-cell inspection only
FINE_DISC_RADIUS = 2        # small objects sit this close to furniture

# Movement (cells per tick).
SPEED_FAST = 2
SPEED_NORMAL = 1
DEGRADED_MOVE_COOLDOWN = 1  # ticks between successful moves after battery drain

# Planning.
MAX_PLAN_STEPS = 8
REPLAN_PERIOD = 25
SUBGRAPH_RADIUS_ROOMS = 1
DOOR_MEMORY = 3

# Episode clock.
TICK_BUDGET = 2000
TICK_SECONDS = 1.0


@dataclass
class AblationFlags:
    no_feedback: bool = False
    no_summary: bool = False
    no_adapt: bool = False

    def to_json(self) -> dict:
        return {
            "no_feedback": self.no_feedback,
            "no_summary": self.no_summary,
            "no_adapt": self.no_adapt,
        }

    @classmethod
    def from_json(cls, d: dict) -> "AblationFlags":
        return cls(
            no_feedback=bool(d.get("no_feedback", False)),
            no_summary=bool(d.get("no_summary", False)),
            no_adapt=bool(d.get("no_adapt", False)),
        )


@dataclass
class RunSettings:
    """Per-run knobs consumed by the engine and planner stacks."""

    tick_budget: int = TICK_BUDGET
    tick_seconds: float = TICK_SECONDS
    replan_period: int = REPLAN_PERIOD
    subgraph_radius: int = SUBGRAPH_RADIUS_ROOMS
    ablations: AblationFlags = field(default_factory=AblationFlags)
    strategy_file: str | None = None

    def to_json(self) -> dict:
        return {
            "tick_budget": self.tick_budget,
            "tick_seconds": self.tick_seconds,
            "replan_period": self.replan_period,
            "subgraph_radius": self.subgraph_radius,
            "ablations": self.ablations.to_json(),
            "strategy_file": self.strategy_file,
        }

    @classmethod
    def from_json(cls, d: dict) -> "RunSettings":
        return cls(
            tick_budget=int(d.get("tick_budget", TICK_BUDGET)),
            tick_seconds=float(d.get("tick_seconds", TICK_SECONDS)),
            replan_period=int(d.get("replan_period", REPLAN_PERIOD)),
            subgraph_radius=int(d.get("subgraph_radius", SUBGRAPH_RADIUS_ROOMS)),
            ablations=AblationFlags.from_json(d.get("ablations", {})),
            strategy_file=d.get("strategy_file"),
        )
