"""Team strategy type and strategist election."""

from __future__ import annotations

from dataclasses import dataclass, field

from conav.util import rng_stream


@dataclass
class CollabStrategy:
    """Role, room assignment, and comm rules for every team member."""

    revision: int
    task_distribution: str
    roles: dict[str, dict]  # agent -> {role_name, directives, rooms}
    comm_rules: list[dict] = field(default_factory=list)

    def role_of(self, agent_id: str) -> str:
        return self.roles[agent_id]["role_name"]

    def rooms_of(self, agent_id: str) -> list[str]:
        return list(self.roles[agent_id].get("rooms", []))

    def scout_holder(self) -> str | None:
        for aid in sorted(self.roles):
            if self.roles[aid]["role_name"] == "scout":
                return aid
        return None

    def room_owner(self, room_id: str) -> str | None:
        """The agent whose assignment covers the room, if exactly one."""
        owners = [aid for aid in sorted(self.roles)
                  if room_id in self.roles[aid].get("rooms", [])]
        return owners[0] if len(owners) == 1 else None

    def to_obj(self) -> dict:
        return {
            "revision": self.revision,
            "task_distribution": self.task_distribution,
            "roles": {aid: {
                "role_name": r["role_name"],
                "directives": list(r.get("directives", [])),
                "rooms": list(r.get("rooms", [])),
            } for aid, r in sorted(self.roles.items())},
            "comm_rules": [dict(r) for r in self.comm_rules],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "CollabStrategy":
        return cls(
            revision=obj["revision"],
            task_distribution=obj["task_distribution"],
            roles={aid: dict(r) for aid, r in obj["roles"].items()},
            comm_rules=[dict(r) for r in obj.get("comm_rules", [])],
        )


def elect_strategist(team_ids: list[str], seed: int) -> str:
    """Uniform seeded choice; every agent computes the same answer."""
    if not team_ids:
        raise ValueError("empty team")
    return rng_stream(seed, "strategist").choice(sorted(team_ids))
