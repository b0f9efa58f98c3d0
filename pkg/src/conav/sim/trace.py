"""Byte-stable episode traces.

A trace records the run configuration, every noteworthy event in tick
order, and the final outcome. Serialization goes through canonical_json,
and nothing time- or host-dependent is ever written, so two runs of the
same episode produce identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

from conav.util import canonical_json


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    agent: str
    kind: str  # "condition" | "action" | "message" | "strategy" | "plan" | "llm" | "detection" | "backend_failure"
    payload: dict

    def to_obj(self) -> dict:
        return {
            "tick": self.tick,
            "agent": self.agent,
            "kind": self.kind,
            "payload": self.payload,
        }


class EpisodeTrace:
    """Append-only event log for one episode run."""

    def __init__(self, config: dict):
        self.config = config
        self.events: list[TraceEvent] = []
        self.final: dict = {}

    def add(self, tick: int, agent: str, kind: str, payload: dict) -> None:
        self.events.append(TraceEvent(tick, agent, kind, payload))

    def message_event(self, tick: int, sender: str, payload: dict) -> None:
        """Hook handed to the message bus so sends land in the trace."""
        self.add(tick, sender, "message", payload)

    def count(self, kind: str) -> int:
        return sum(1 for e in self.events if e.kind == kind)

    def finalize(self, status: str, ticks: int, tick_seconds: float,
                 found: dict, steps: dict) -> None:
        self.final = {
            "status": status,
            "ticks": ticks,
            "episode_time_s": ticks * tick_seconds,
            "found": found,
            "steps": dict(sorted(steps.items())),
            "messages": self.count("message"),
        }

    def to_obj(self) -> dict:
        return {
            "config": self.config,
            "events": [e.to_obj() for e in self.events],
            "final": self.final,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_obj())
