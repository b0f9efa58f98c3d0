"""Simulation-facing types: skills, profiles, actions, observations."""

from __future__ import annotations

from dataclasses import dataclass, field

from conav.config import (
    DETECT_RANGE_NORMAL,
    DETECT_RANGE_SMALL_HI,
    DETECT_RANGE_SMALL_LO,
    SPEED_FAST,
    SPEED_NORMAL,
)
from conav.util import Cell

NOMINAL = "nominal"
DEGRADED_BATTERY = "degraded_battery"

TURN_LEFT = "turn_left"
TURN_RIGHT = "turn_right"
MOVE_FORWARD = "move_forward"
STOP = "stop"
LOOK_AROUND = "look_around"
OPEN = "open"
CLOSE = "close"

ACTION_KINDS = (TURN_LEFT, TURN_RIGHT, MOVE_FORWARD, STOP, LOOK_AROUND, OPEN, CLOSE)


class IllegalAction(Exception):
    """Action violates a skill gate or references a bad entity.

    The engine converts this into an "illegal" outcome; it never escapes
    a step() call.
    """


@dataclass(frozen=True)
class SkillSet:
    fast: bool = False
    manipulation: bool = False
    high_res_camera: bool = False

    def label(self) -> str:
        s = ""
        if self.fast:
            s += "F"
        if self.manipulation:
            s += "M"
        if self.high_res_camera:
            s += "H"
        return s or "none"

    @classmethod
    def parse(cls, text: str) -> "SkillSet":
        """Parse letters like "FMH", "M", or "none"."""
        t = text.strip().upper()
        if t in ("", "NONE", "-"):
            return cls()
        bad = set(t) - set("FMH")
        if bad:
            raise ValueError(f"unknown skill letters: {sorted(bad)}")
        return cls(fast="F" in t, manipulation="M" in t, high_res_camera="H" in t)

    def to_obj(self) -> dict:
        return {
            "fast": self.fast,
            "manipulation": self.manipulation,
            "high_res_camera": self.high_res_camera,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "SkillSet":
        return cls(fast=obj["fast"], manipulation=obj["manipulation"],
                   high_res_camera=obj["high_res_camera"])


@dataclass
class AgentProfile:
    agent_id: str
    skills: SkillSet
    condition: str = NOMINAL

    @property
    def speed_cells_per_tick(self) -> int:
        if self.skills.fast and self.condition == NOMINAL:
            return SPEED_FAST
        return SPEED_NORMAL

    @property
    def detect_range_normal(self) -> int:
        return DETECT_RANGE_NORMAL

    @property
    def detect_range_small(self) -> int:
        if self.skills.high_res_camera:
            return DETECT_RANGE_SMALL_HI
        return DETECT_RANGE_SMALL_LO

    def to_obj(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "skills": self.skills.to_obj(),
            "condition": self.condition,
            "speed_cells_per_tick": self.speed_cells_per_tick,
            "detect_range_normal": self.detect_range_normal,
            "detect_range_small": self.detect_range_small,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "AgentProfile":
        return cls(agent_id=obj["agent_id"],
                   skills=SkillSet.from_obj(obj["skills"]),
                   condition=obj["condition"])


@dataclass(frozen=True)
class PrimitiveAction:
    kind: str
    receptacle_id: str | None = None

    def __post_init__(self):
        if self.kind not in ACTION_KINDS:
            raise ValueError(f"unknown action kind {self.kind!r}")
        if self.kind in (OPEN, CLOSE) and not self.receptacle_id:
            raise ValueError(f"{self.kind} requires a receptacle_id")

    def to_obj(self) -> dict:
        obj: dict = {"kind": self.kind}
        if self.receptacle_id is not None:
            obj["receptacle_id"] = self.receptacle_id
        return obj


@dataclass(frozen=True)
class ActionOutcome:
    result: str  # "success" | "blocked" | "illegal"
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.result == "success"

    def to_obj(self) -> dict:
        return {"result": self.result, "detail": self.detail}


@dataclass(frozen=True)
class VisibleEntity:
    entity_id: str
    entity_kind: str  # "object" | "receptacle"
    cell: Cell
    room_id: str | None
    category: str
    size_class: str | None = None
    openable: bool | None = None
    open_state: bool | None = None
    container_id: str | None = None

    def to_obj(self) -> dict:
        return {
            "entity_id": self.entity_id,
            "entity_kind": self.entity_kind,
            "cell": list(self.cell),
            "room_id": self.room_id,
            "category": self.category,
            "size_class": self.size_class,
            "openable": self.openable,
            "open_state": self.open_state,
            "container_id": self.container_id,
        }


@dataclass
class Observation:
    tick: int
    agent_id: str
    cell: Cell
    heading: str
    visible: list[VisibleEntity]
    detections: list[str]
    seen_cells: list[Cell] = field(default_factory=list)
    surround: bool = False

    def to_obj(self) -> dict:
        return {
            "tick": self.tick,
            "agent_id": self.agent_id,
            "cell": list(self.cell),
            "heading": self.heading,
            "visible": [v.to_obj() for v in self.visible],
            "detections": list(self.detections),
            "surround": self.surround,
        }


@dataclass(frozen=True)
class ConditionEvent:
    tick: int
    agent: str
    set_condition: str

    def to_obj(self) -> dict:
        return {"tick": self.tick, "agent": self.agent,
                "set_condition": self.set_condition}

    @classmethod
    def from_obj(cls, obj: dict) -> "ConditionEvent":
        return cls(tick=obj["tick"], agent=obj["agent"],
                   set_condition=obj["set_condition"])


@dataclass
class AgentPose:
    cell: Cell
    heading: str


@dataclass
class EpisodeState:
    tick: int
    poses: dict[str, AgentPose]
    open_states: dict[str, bool]
    found_targets: set[str]
    status: str  # "running" | "success" | "timeout"
