"""Per-agent scene graph: what one robot believes about the world.

The floor plan (rooms, walls, doors) is known a priori; furniture and
objects are discovered by looking. Every mutable fact merges through a
join: entity records are ordered by (provenance rank, tick, canonical
bytes), room state joins componentwise (max status, union of claimant and
visitor sets), and coverage sets join by union. Joins are idempotent,
commutative, and associative, so ingesting an observation twice or
merging teammates' reports in any order yields the same belief state.

Provenance "observed" (my own sensors) outranks "reported" (a teammate
said so), whatever the ticks say: a robot trusts its own eyes first.
Entity ids are globally consistent (the simulator shares them), so merges
are exact unions and a reported id can be checked against the world
schema; reports that fail the check are recorded and skipped rather than
poisoning the graph.
"""

from __future__ import annotations

from collections import deque

from conav import comms
from conav.config import SUBGRAPH_RADIUS_ROOMS
from conav.util import Cell, canonical_json, chebyshev
from conav.world.types import WALL, House

_PROV_RANK = {"reported": 0, "observed": 1}

UNSEEN = 0
CLAIMED = 1
VISITED = 2
_STATUS_NAMES = {UNSEEN: "unseen", CLAIMED: "claimed", VISITED: "visited"}


def _entity_key(rec: dict) -> tuple:
    return (_PROV_RANK[rec["provenance"]], rec["tick"], canonical_json(rec))


def _join_entity(a: dict | None, b: dict | None) -> dict | None:
    if a is None:
        return b
    if b is None:
        return a
    return a if _entity_key(a) >= _entity_key(b) else b


def _join_room(a: dict, b: dict) -> dict:
    return {
        "status": max(a["status"], b["status"]),
        "claimants": sorted(set(a["claimants"]) | set(b["claimants"])),
        "visitors": sorted(set(a["visitors"]) | set(b["visitors"])),
    }


def _join_peer_field(a: dict | None, b: dict | None) -> dict | None:
    if a is None:
        return b
    if b is None:
        return a
    ka = (a["tick"], canonical_json(a))
    kb = (b["tick"], canonical_json(b))
    return a if ka >= kb else b


class LocalSceneGraph:
    """One agent's merged world belief plus coverage bookkeeping."""

    def __init__(self, house: House, agent_id: str, fine_range: int):
        self.house = house
        self.agent_id = agent_id
        self.fine_range = fine_range
        self.entities: dict[str, dict] = {}
        self.rooms: dict[str, dict] = {
            r.id: {"status": UNSEEN, "claimants": [], "visitors": []}
            for r in house.rooms}
        self.seen: dict[str, set[Cell]] = {r.id: set() for r in house.rooms}
        self.fine: dict[str, set[Cell]] = {r.id: set() for r in house.rooms}
        self.looked: set[Cell] = set()
        self.coarse_done: set[str] = set()
        self.blocked: set[Cell] = set()
        self.peers: dict[str, dict] = {}
        self.unknown_reports: list[dict] = []
        # Believed walkability: walls block, everything else is assumed
        # clear until a footprint is discovered or a move bounces.
        g = house.grid
        self._passable = bytearray(0 if k == WALL else 1 for k in g.cells)
        self._room_hops = self._compute_room_hops()

    # ------------------------------------------------------------------
    # belief updates

    def ingest_observation(self, obs) -> list[dict]:
        """Fold one of my own Observations in; returns changed records."""
        changed = []
        for ent in obs.visible:
            rec = {
                "id": ent.entity_id,
                "kind": ent.entity_kind,
                "category": ent.category,
                "cell": list(ent.cell),
                "room_id": ent.room_id,
                "size_class": ent.size_class,
                "openable": ent.openable,
                "open_state": ent.open_state,
                "container_id": ent.container_id,
                "provenance": "observed",
                "tick": obs.tick,
            }
            if self._upsert(rec):
                changed.append(rec)
        if obs.surround:
            self._note_surround(obs)
        return changed

    def _upsert(self, rec: dict) -> bool:
        cur = self.entities.get(rec["id"])
        new = _join_entity(cur, rec)
        self.entities[rec["id"]] = new
        if new["kind"] == "receptacle":
            self.note_blocked(tuple(new["cell"]))
        return cur is None or canonical_json(cur) != canonical_json(new)

    def _note_surround(self, obs) -> None:
        ax, ay = obs.cell
        self.looked.add((ax, ay))
        for cell in obs.seen_cells:
            room = self.house.room_of(cell)
            if room is not None:
                self.seen[room].add(tuple(cell))
                if chebyshev(cell, (ax, ay)) <= self.fine_range:
                    self.fine[room].add(tuple(cell))
        here = self.house.room_of((ax, ay))
        if here is not None:
            self.mark_visited(here, self.agent_id)

    def note_blocked(self, cell: Cell) -> None:
        self.blocked.add(tuple(cell))
        self._passable[self.house.grid.index(cell)] = 0

    def note_peer(self, agent_id: str, info: dict, tick: int) -> None:
        """Fold facts about a teammate in, each field joined independently.

        A later condition report must not erase earlier skill knowledge,
        and merge order must not matter, so every field keeps its own
        latest-wins record.
        """
        rec = self.peers.setdefault(agent_id, {})
        for key, value in info.items():
            cand = {"tick": tick, "value": value}
            rec[key] = _join_peer_field(rec.get(key), cand)

    def peer_fact(self, agent_id: str, key: str):
        rec = self.peers.get(agent_id, {})
        entry = rec.get(key)
        return None if entry is None else entry["value"]

    def mark_claimed(self, room_id: str, agent: str) -> None:
        self.rooms[room_id] = _join_room(
            self.rooms[room_id],
            {"status": CLAIMED, "claimants": [agent], "visitors": []})

    def mark_visited(self, room_id: str, agent: str) -> None:
        self.rooms[room_id] = _join_room(
            self.rooms[room_id],
            {"status": VISITED, "claimants": [], "visitors": [agent]})

    def mark_coarse_done(self, room_id: str) -> None:
        self.coarse_done.add(room_id)

    def merge_remote_knowledge(self, env: comms.Envelope) -> bool:
        """Fold a teammate's message in; returns False for skipped ones.

        Reports naming entities or rooms outside the world schema are
        logged in unknown_reports and ignored (hallucination guard).
        """
        msg = env.message
        tick = env.send_tick
        if isinstance(msg, comms.Background):
            info = {"skills": msg.skills, "condition": msg.condition}
            if msg.cell is not None:
                info["cell"] = tuple(msg.cell)
            self.note_peer(msg.sender, info, tick)
            return True
        if isinstance(msg, comms.ConditionChange):
            self.note_peer(msg.sender, {"condition": msg.new_condition}, tick)
            return True
        if isinstance(msg, comms.RoomClaim):
            if not self._known_room(msg.room_id, env):
                return False
            self.mark_claimed(msg.room_id, msg.sender)
            return True
        if isinstance(msg, comms.RoomVisited):
            if not self._known_room(msg.room_id, env):
                return False
            self.mark_visited(msg.room_id, msg.sender)
            self.mark_coarse_done(msg.room_id)
            return True
        if isinstance(msg, comms.Sighting):
            try:
                ent = self.house.object_by_id(msg.entity_id)
                kind = "object"
            except KeyError:
                try:
                    ent = self.house.receptacle_by_id(msg.entity_id)
                    kind = "receptacle"
                except KeyError:
                    self.unknown_reports.append(
                        {"tick": tick, "sender": msg.sender,
                         "entity_id": msg.entity_id})
                    return False
            rec = {
                "id": msg.entity_id,
                "kind": kind,
                "category": msg.category,
                "cell": list(msg.cell),
                "room_id": msg.room_id,
                "size_class": getattr(ent, "size_class", None),
                "openable": getattr(ent, "openable", None),
                "open_state": False if kind == "receptacle" else None,
                "container_id": getattr(ent, "container_id", None),
                "provenance": "reported",
                "tick": tick,
            }
            self._upsert(rec)
            return True
        # StrategyBroadcast and AssistRequest are planner-level concerns.
        return True

    def _known_room(self, room_id: str, env: comms.Envelope) -> bool:
        if room_id in self.rooms:
            return True
        self.unknown_reports.append(
            {"tick": env.send_tick, "sender": env.sender,
             "room_id": room_id})
        return False

    # ------------------------------------------------------------------
    # queries

    def passable_mask(self) -> bytearray:
        return self._passable

    def record(self, entity_id: str) -> dict | None:
        return self.entities.get(entity_id)

    def receptacles_in(self, room_id: str) -> list[dict]:
        return sorted(
            (r for r in self.entities.values()
             if r["kind"] == "receptacle" and r["room_id"] == room_id),
            key=lambda r: r["id"])

    def objects_in(self, room_id: str) -> list[dict]:
        return sorted(
            (r for r in self.entities.values()
             if r["kind"] == "object" and r["room_id"] == room_id),
            key=lambda r: r["id"])

    def openables_closed(self, room_id: str | None = None) -> list[dict]:
        out = []
        for r in sorted(self.entities.values(), key=lambda r: r["id"]):
            if r["kind"] != "receptacle" or not r["openable"]:
                continue
            if r["open_state"]:
                continue
            if room_id is None or r["room_id"] == room_id:
                out.append(r)
        return out

    def objects_of_category(self, category: str) -> list[dict]:
        return sorted(
            (r for r in self.entities.values()
             if r["kind"] == "object" and r["category"] == category),
            key=lambda r: r["id"])

    def room_status(self, room_id: str) -> int:
        return self.rooms[room_id]["status"]

    def _compute_room_hops(self) -> dict[str, dict[str, int]]:
        adj: dict[str, set[str]] = {r.id: set() for r in self.house.rooms}
        for d in self.house.doors:
            adj[d.room_a].add(d.room_b)
            adj[d.room_b].add(d.room_a)
        hops: dict[str, dict[str, int]] = {}
        for start in adj:
            dist = {start: 0}
            q = deque([start])
            while q:
                cur = q.popleft()
                for nxt in adj[cur]:
                    if nxt not in dist:
                        dist[nxt] = dist[cur] + 1
                        q.append(nxt)
            hops[start] = dist
        return hops

    def room_hops(self, a: str, b: str) -> int:
        return self._room_hops[a].get(b, len(self.rooms) + 1)

    def rooms_within(self, room_id: str, radius: int) -> list[str]:
        dist = self._room_hops[room_id]
        return sorted(r for r, d in dist.items() if d <= radius)

    # ------------------------------------------------------------------
    # serialization and subgraphs

    def serialize(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "entities": {k: dict(v) for k, v in sorted(self.entities.items())},
            "rooms": {k: dict(v) for k, v in sorted(self.rooms.items())},
            "seen": {k: sorted(map(list, v))
                     for k, v in sorted(self.seen.items())},
            "fine": {k: sorted(map(list, v))
                     for k, v in sorted(self.fine.items())},
            "looked": sorted(map(list, self.looked)),
            "coarse_done": sorted(self.coarse_done),
            "blocked": sorted(map(list, self.blocked)),
            "peers": {k: dict(v) for k, v in sorted(self.peers.items())},
        }

    def extract_subgraph(self, room_id: str,
                         radius: int = SUBGRAPH_RADIUS_ROOMS) -> dict:
        """Nearby rooms in full detail plus a global room-status summary."""
        keep = self.rooms_within(room_id, radius)
        keep_set = set(keep)
        rooms = {}
        for rid in keep:
            room = self.house.room_by_id(rid)
            st = self.rooms[rid]
            rooms[rid] = {
                "kind": room.kind,
                "status": st["status"],
                "claimants": list(st["claimants"]),
                "visitors": list(st["visitors"]),
                "coarse_done": rid in self.coarse_done,
                "cells_scanned": len(self.seen[rid]),
            }
        doors = []
        for d in sorted(self.house.doors, key=lambda d: d.id):
            if d.room_a in keep_set or d.room_b in keep_set:
                doors.append({"id": d.id, "cell": list(d.cell),
                              "room_a": d.room_a, "room_b": d.room_b})
        entities = {k: dict(v) for k, v in sorted(self.entities.items())
                    if v["room_id"] in keep_set}
        summary = {rid: _STATUS_NAMES[self.rooms[rid]["status"]]
                   for rid in sorted(self.rooms)}
        return {
            "agent_id": self.agent_id,
            "center_room": room_id,
            "radius": radius,
            "rooms": rooms,
            "doors": doors,
            "entities": entities,
            "room_status_summary": summary,
        }

    def render_text(self, room_id: str,
                    radius: int = SUBGRAPH_RADIUS_ROOMS) -> str:
        return serialize_subgraph(self.extract_subgraph(room_id, radius))


def serialize_subgraph(sub: dict) -> str:
    """Stable human-readable rendering of an extracted subgraph."""
    rooms = sub.get("rooms", {})
    if not rooms:
        return "No rooms explored yet."
    entities = sub.get("entities", {})
    lines = []
    for rid in sorted(rooms):
        info = rooms[rid]
        status = _STATUS_NAMES[info["status"]]
        if info["visitors"]:
            status += " by " + ", ".join(info["visitors"])
        elif info["claimants"]:
            status += " by " + ", ".join(info["claimants"])
        sweep = "complete" if info["coarse_done"] else "incomplete"
        lines.append(f"{rid} ({info['kind']}): {status}, sweep {sweep}, "
                     f"{info['cells_scanned']} cells scanned")
        for d in sub.get("doors", []):
            if rid in (d["room_a"], d["room_b"]):
                other = d["room_b"] if d["room_a"] == rid else d["room_a"]
                lines.append(f"  - door {d['id']} at {d['cell']} to {other}")
        for eid in sorted(entities):
            rec = entities[eid]
            if rec["room_id"] != rid:
                continue
            if rec["kind"] == "receptacle":
                if rec["openable"]:
                    state = "open" if rec["open_state"] else "closed"
                else:
                    state = "surface"
                lines.append(f"  - {rec['category']} {eid} at "
                             f"{rec['cell']} ({state})")
            else:
                size = rec["size_class"] or "normal"
                lines.append(f"  - {size} object {rec['category']} ({eid}) "
                             f"at {rec['cell']}")
    other = [f"{rid}: {name}"
             for rid, name in sorted(sub.get("room_status_summary", {}).items())
             if rid not in rooms]
    if other:
        lines.append("Elsewhere: " + "; ".join(other))
    return "\n".join(lines)
