"""Broadcast message bus and the message vocabulary agents exchange.

Messages sent during tick T become readable by every other agent at tick
T+1 (one tick of latency, as if radioed between decision cycles). Delivery
order is fixed by (send_tick, sender, seq), so runs are deterministic.
An inert bus (independent mode) drops sends silently and never logs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from conav.util import Cell


class BusClosed(Exception):
    """The episode ended; no further sends or drains are allowed."""


@dataclass(frozen=True)
class Background:
    """Who I am: capabilities, current hardware condition, and position.

    The position lets the strategist hand each agent the rooms on its own
    side of the house instead of dealing rooms out blindly.
    """

    sender: str
    skills: str  # label such as "FM" or "none"
    condition: str
    cell: Cell | None = None

    def to_obj(self) -> dict:
        return {"type": "background", "sender": self.sender,
                "skills": self.skills, "condition": self.condition,
                "cell": list(self.cell) if self.cell is not None else None}


@dataclass(frozen=True)
class StrategyBroadcast:
    """The strategist's team plan, serialized, with its revision number."""

    sender: str
    revision: int
    strategy: dict

    def to_obj(self) -> dict:
        return {"type": "strategy", "sender": self.sender,
                "revision": self.revision, "strategy": self.strategy}


@dataclass(frozen=True)
class RoomClaim:
    sender: str
    room_id: str

    def to_obj(self) -> dict:
        return {"type": "room_claim", "sender": self.sender,
                "room_id": self.room_id}


@dataclass(frozen=True)
class RoomVisited:
    """Sender finished its search sweep of the room."""

    sender: str
    room_id: str

    def to_obj(self) -> dict:
        return {"type": "room_visited", "sender": self.sender,
                "room_id": self.room_id}


@dataclass(frozen=True)
class Sighting:
    """A target-relevant entity was seen; needs_assist names a skill letter
    when the sender cannot resolve the sighting alone."""

    sender: str
    category: str
    entity_id: str
    room_id: str | None
    cell: Cell
    needs_assist: str | None = None

    def to_obj(self) -> dict:
        return {"type": "sighting", "sender": self.sender,
                "category": self.category, "entity_id": self.entity_id,
                "room_id": self.room_id, "cell": list(self.cell),
                "needs_assist": self.needs_assist}


@dataclass(frozen=True)
class AssistRequest:
    """Ask a capable teammate to open something or fine-search an area."""

    sender: str
    to: str  # agent id or "all"
    skill_needed: str  # "M" for opening, "H" for fine search
    room_id: str | None
    detail: dict = field(default_factory=dict)

    def to_obj(self) -> dict:
        return {"type": "assist_request", "sender": self.sender,
                "to": self.to, "skill_needed": self.skill_needed,
                "room_id": self.room_id, "detail": dict(self.detail)}


@dataclass(frozen=True)
class ConditionChange:
    sender: str
    new_condition: str

    def to_obj(self) -> dict:
        return {"type": "condition_change", "sender": self.sender,
                "new_condition": self.new_condition}


Message = (Background | StrategyBroadcast | RoomClaim | RoomVisited
           | Sighting | AssistRequest | ConditionChange)


@dataclass(frozen=True)
class Envelope:
    send_tick: int
    sender: str
    seq: int
    message: Message

    def sort_key(self) -> tuple:
        return (self.send_tick, self.sender, self.seq)


class MessageBus:
    """One-tick-latency broadcast bus.

    send() during tick T queues the message; advance(T) at the end of the
    tick moves it into every other agent's inbox for tick T+1. drain()
    returns an agent's pending envelopes oldest first and clears them.
    """

    def __init__(self, active: bool = True, on_send=None):
        self.active = active
        self._on_send = on_send
        self._pending: list[Envelope] = []
        self._inboxes: dict[str, list[Envelope]] = {}
        self._seq = 0
        self._closed = False
        self.sent_count = 0

    def register(self, agent_id: str) -> None:
        self._inboxes.setdefault(agent_id, [])

    def close(self) -> None:
        self._closed = True

    def send(self, tick: int, message: Message) -> None:
        if self._closed:
            raise BusClosed("bus is closed")
        if not self.active:
            return
        env = Envelope(send_tick=tick, sender=message.sender,
                       seq=self._seq, message=message)
        self._seq += 1
        self.sent_count += 1
        self._pending.append(env)
        if self._on_send is not None:
            self._on_send(tick, message.sender, message.to_obj())

    def advance(self, tick: int) -> None:
        """Deliver everything sent during this tick to the other agents."""
        if not self._pending:
            return
        ready = [e for e in self._pending if e.send_tick <= tick]
        self._pending = [e for e in self._pending if e.send_tick > tick]
        ready.sort(key=Envelope.sort_key)
        for env in ready:
            for aid, box in self._inboxes.items():
                if aid != env.sender:
                    box.append(env)

    def drain(self, agent_id: str) -> list[Envelope]:
        if self._closed:
            raise BusClosed("bus is closed")
        box = self._inboxes.setdefault(agent_id, [])
        out = sorted(box, key=Envelope.sort_key)
        box.clear()
        return out


def render_messages(envelopes: list[Envelope]) -> str:
    """Deterministic inbox transcript for prompt assembly."""
    if not envelopes:
        return "No new messages."
    lines = []
    for env in envelopes:
        m = env.message
        head = f"[t={env.send_tick}] {env.sender}:"
        if isinstance(m, Background):
            at = f" at {list(m.cell)}" if m.cell is not None else ""
            lines.append(f"{head} background skills={m.skills} "
                         f"condition={m.condition}{at}")
        elif isinstance(m, StrategyBroadcast):
            lines.append(f"{head} strategy revision {m.revision} "
                         f"({m.strategy.get('task_distribution', '?')})")
        elif isinstance(m, RoomClaim):
            lines.append(f"{head} claims {m.room_id}")
        elif isinstance(m, RoomVisited):
            lines.append(f"{head} finished searching {m.room_id}")
        elif isinstance(m, Sighting):
            tail = (f", needs {m.needs_assist}" if m.needs_assist else "")
            lines.append(f"{head} saw {m.category} ({m.entity_id}) in "
                         f"{m.room_id} at {list(m.cell)}{tail}")
        elif isinstance(m, AssistRequest):
            lines.append(f"{head} asks {m.to} for skill {m.skill_needed} "
                         f"in {m.room_id}, detail {m.detail}")
        elif isinstance(m, ConditionChange):
            lines.append(f"{head} condition is now {m.new_condition}")
        else:
            lines.append(f"{head} {m.to_obj()}")
    return "\n".join(lines)


_MESSAGE_TYPES = {
    "background": Background,
    "strategy": StrategyBroadcast,
    "room_claim": RoomClaim,
    "room_visited": RoomVisited,
    "sighting": Sighting,
    "assist_request": AssistRequest,
    "condition_change": ConditionChange,
}


def message_from_obj(obj: dict) -> Message:
    """Rebuild a message from its to_obj form (trace files, transports)."""
    kind = obj["type"]
    cls = _MESSAGE_TYPES[kind]
    kwargs = {k: v for k, v in obj.items() if k != "type"}
    if kwargs.get("cell") is not None:
        kwargs["cell"] = tuple(kwargs["cell"])
    return cls(**kwargs)
