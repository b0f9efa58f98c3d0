"""Short-horizon plan types and the coverage math behind sweep planning.

A room is searched in three passes, all computed from the agent's own
scene graph so the planner is self-correcting:

1. Coarse sweep: stand on a lattice of vantage cells (spaced so a
   look_around's detection square overlaps the next one) and scan.
2. Mop-up: any room cell still unseen gets a dedicated landing on or
   4-adjacent to it; adjacent sight cannot be occluded, so this pass
   always converges to full coverage.
3. Fine pass: small objects only sit near furniture, so cells within
   reach of a known receptacle are re-scanned from close range (or one
   wider pass for a high-resolution camera).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from conav.config import DETECT_RANGE_NORMAL, FINE_DISC_RADIUS
from conav.gridcore import bfs_dist, los_clear
from conav.util import Cell, chebyshev
from conav.world.types import WALL, Room


@dataclass
class StepPlan:
    plan_id: str
    based_on_tick: int
    steps: list[dict]
    fallback: bool = False

    def to_obj(self) -> dict:
        return {
            "plan_id": self.plan_id,
            "based_on_tick": self.based_on_tick,
            "steps": [dict(s) for s in self.steps],
            "fallback": self.fallback,
        }


@dataclass
class Summary:
    """Bounded memory of mission progress, rendered into prompts."""

    remaining_targets: list[str] = field(default_factory=list)
    rooms_visited: dict[str, list[str]] = field(default_factory=dict)
    rooms_claimed: dict[str, list[str]] = field(default_factory=dict)
    found: dict[str, str] = field(default_factory=dict)
    my_recent_steps: list[str] = field(default_factory=list)
    recent_doors: list[str] = field(default_factory=list)

    def to_obj(self) -> dict:
        return {
            "remaining_targets": list(self.remaining_targets),
            "rooms_visited": {k: list(v)
                              for k, v in sorted(self.rooms_visited.items())},
            "rooms_claimed": {k: list(v)
                              for k, v in sorted(self.rooms_claimed.items())},
            "found": dict(sorted(self.found.items())),
            "my_recent_steps": list(self.my_recent_steps),
            "recent_doors": list(self.recent_doors),
        }

    def render(self) -> str:
        lines = []
        if self.remaining_targets:
            lines.append("Remaining targets: "
                         + ", ".join(self.remaining_targets))
        else:
            lines.append("Remaining targets: none")
        for cat, room in sorted(self.found.items()):
            lines.append(f"Found {cat} in {room}")
        if self.rooms_visited:
            parts = [f"{rid} ({', '.join(v)})"
                     for rid, v in sorted(self.rooms_visited.items())]
            lines.append("Rooms visited: " + "; ".join(parts))
        else:
            lines.append("Rooms visited: none")
        if self.rooms_claimed:
            parts = [f"{rid} ({', '.join(v)})"
                     for rid, v in sorted(self.rooms_claimed.items())]
            lines.append("Rooms claimed: " + "; ".join(parts))
        if self.my_recent_steps:
            lines.append("My recent steps: "
                         + "; ".join(self.my_recent_steps))
        if self.recent_doors:
            lines.append("Recently used doors: "
                         + ", ".join(self.recent_doors))
        return "\n".join(lines)


@dataclass
class Feedback:
    """Outcome of the most recently executed plan."""

    plan_id: str | None = None
    outcomes: list[dict] = field(default_factory=list)
    notes: str = ""

    def to_obj(self) -> dict:
        return {"plan_id": self.plan_id,
                "outcomes": [dict(o) for o in self.outcomes],
                "notes": self.notes}

    def render(self) -> str:
        if self.plan_id is None:
            return "none yet"
        lines = [f"plan {self.plan_id}:"]
        for o in self.outcomes:
            note = f" ({o['note']})" if o.get("note") else ""
            lines.append(f"  step {o['step_index']} {o['function']}: "
                         f"{o['outcome']}{note}")
        if self.notes:
            lines.append(self.notes)
        return "\n".join(lines)


# ----------------------------------------------------------------------
# coverage math (pure functions of graph + room)


def _believed(graph, cell: Cell) -> bool:
    return graph.passable_mask()[graph.house.grid.index(cell)] == 1


def _landable(graph, cell: Cell, reach) -> bool:
    """Believed passable, and (when a reach mask is given) stoppable-on.

    Fast agents cover two cells per unobstructed move, so not every
    believed-passable cell is one they can halt on; landings must come
    from the motion-reachable set or the executor will correctly refuse
    the route and the docket would re-issue it forever.
    """
    if not _believed(graph, cell):
        return False
    if reach is None:
        return True
    return reach[graph.house.grid.index(cell)] == 1


def believed_sight_blockers(graph) -> bytes:
    """Sight-blocker mask from the believed map.

    Walls always block. A receptacle footprint blocks while believed
    closed; open furniture is see-through, and undiscovered furniture is
    optimistically clear.
    """
    g = graph.house.grid
    mask = bytearray(1 if k == WALL else 0 for k in g.cells)
    for rec in graph.entities.values():
        if rec["kind"] == "receptacle" and not rec["open_state"]:
            mask[g.index(tuple(rec["cell"]))] = 1
    return bytes(mask)


def landing_bits(graph) -> list[int]:
    """Requirement groups for safe-landing checks, as per-cell bitmasks.

    One group per room (its believed-passable cells) and one per known
    receptacle (the believed-passable cells it can be worked from), so a
    landing only counts as safe if the agent could still visit every room
    and still get beside every piece of furniture it knows about
    afterwards.
    """
    g = graph.house.grid
    passable = graph.passable_mask()
    bits = [0] * (g.width * g.height)
    bit = 1
    for room in sorted(graph.house.rooms, key=lambda r: r.id):
        for c in room.cells():
            i = g.index(c)
            if passable[i]:
                bits[i] |= bit
        bit <<= 1
    recs = sorted((r for r in graph.entities.values()
                   if r["kind"] == "receptacle"), key=lambda r: r["id"])
    for rec in recs:
        if bit >= 1 << 62:
            break
        rx, ry = rec["cell"]
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                c = (rx + dx, ry + dy)
                if not g.in_bounds(c):
                    continue
                i = g.index(c)
                if passable[i]:
                    bits[i] |= bit
        bit <<= 1
    return bits


def nearest_passable_in_room(graph, room: Room, ideal: Cell,
                             reach=None) -> Cell | None:
    best = None
    best_key = None
    for cell in room.cells():
        if not _landable(graph, cell, reach):
            continue
        key = (chebyshev(cell, ideal), cell[1], cell[0])
        if best_key is None or key < best_key:
            best, best_key = cell, key
    return best


def coarse_vantages(graph, room: Room, reach=None) -> list[Cell]:
    """Sweep-lattice landings not yet scanned from, in lattice order."""
    out = []
    for ideal in room.sweep_cells():
        v = nearest_passable_in_room(graph, room, ideal, reach)
        if v is not None and v not in graph.looked and v not in out:
            out.append(v)
    return out


def mopup_targets(graph, room: Room, reach=None) -> list[Cell]:
    """Cells to stand on so every still-unseen room cell gets looked at.

    Adjacent sight cannot be occluded, so standing on or 4-adjacent to an
    unseen cell always clears it. When none of those cells is landable
    (speed-2 parity), fall back to any landable room cell with believed
    line of sight within scan range; cells with no vantage at all are
    left out and simply stay unseen.
    """
    seen = graph.seen[room.id]
    unseen = [c for c in room.cells()
              if _believed(graph, c) and c not in seen]
    if not unseen:
        return []
    g = graph.house.grid
    sight = None
    targets = []
    for c in unseen:
        x, y = c
        found = False
        for cand in ((x, y), (x, y - 1), (x - 1, y), (x + 1, y), (x, y + 1)):
            if room.contains(cand) and _landable(graph, cand, reach):
                if cand not in targets:
                    targets.append(cand)
                found = True
                break
        if found:
            continue
        if sight is None:
            sight = believed_sight_blockers(graph)
        cands = []
        for cand in room.cells():
            if chebyshev(cand, c) > DETECT_RANGE_NORMAL:
                continue
            if not _landable(graph, cand, reach):
                continue
            if los_clear(sight, g.width, g.height,
                         cand[0], cand[1], x, y):
                cands.append((chebyshev(cand, c), cand[1], cand[0], cand))
        if cands:
            cands.sort()
            if cands[0][3] not in targets:
                targets.append(cands[0][3])
    targets.sort(key=lambda c: (c[1], c[0]))
    return targets


def uncovered_fine(graph, room: Room) -> list[Cell]:
    """Disc cells near known receptacles not yet scanned from close range."""
    fine = graph.fine[room.id]
    cells = []
    for rec in graph.receptacles_in(room.id):
        rc = tuple(rec["cell"])
        for c in room.cells():
            if not _believed(graph, c) or c in fine or c in cells:
                continue
            if chebyshev(c, rc) <= FINE_DISC_RADIUS:
                cells.append(c)
    cells.sort(key=lambda c: (c[1], c[0]))
    return cells


def fine_landings(graph, room: Room, fine_range: int,
                  bfs: list[int], limit: int = 3,
                  reach=None) -> list[Cell]:
    """Where to stand to fine-scan the uncovered disc cells.

    The first try may use the full fine range; if a scan from within
    range already happened and the cell is still uncovered, line of
    sight must be blocked from afar, so the retry lands adjacent
    (adjacent sight cannot be occluded).
    """
    g = graph.house.grid
    sight = believed_sight_blockers(graph)
    landings: list[Cell] = []
    for target in uncovered_fine(graph, room):
        if len(landings) >= limit:
            break
        retry = any(chebyshev(lk, target) <= fine_range
                    for lk in graph.looked)
        cands = []
        for c in room.cells():
            if not _landable(graph, c, reach):
                continue
            if chebyshev(c, target) > fine_range:
                continue
            if not los_clear(sight, g.width, g.height,
                             c[0], c[1], target[0], target[1]):
                continue
            d = bfs[g.index(c)]
            if d < 0:
                continue
            cands.append((d, c[1], c[0], c))
        if not cands:
            continue
        cands.sort()
        # A scan from within range already missed this cell once, so an
        # unknown blocker is fibbing to the sight model; close in if any
        # adjacent landing exists.
        if retry:
            close = [t for t in cands if chebyshev(t[3], target) <= 1]
            if close:
                cands = close
        best = cands[0][3]
        if best not in landings:
            landings.append(best)
    return landings


def room_docket(graph, my_cell: Cell, current_room: str,
                i_open: bool, i_fine: bool, fine_range: int,
                recent_doors: list[str], reach=None) -> dict:
    """Per-room work summary the local planner chooses from.

    `reach` is the motion-reachable cell mask from the agent's current
    pose; every landing the docket offers is guaranteed stoppable-on, so
    an accepted plan step can never be refused as unroutable. Without it
    the docket falls back to plain connectivity.
    """
    house = graph.house
    g = house.grid
    passable = bytes(graph.passable_mask())
    bfs = bfs_dist(passable, g.width, g.height, my_cell[0], my_cell[1])
    if reach is None:
        reach = bytes(1 if bfs[i] >= 0 else 0 for i in range(g.width * g.height))

    recent_set = set(recent_doors)
    docket = {}
    for room in sorted(house.rooms, key=lambda r: r.id):
        rid = room.id
        # A sweep finished by any teammate counts; only residual work is
        # recomputed from my own coverage sets.
        team_done = rid in graph.coarse_done
        vant = [] if team_done else coarse_vantages(graph, room, reach)
        mop = []
        if not team_done and not vant:
            mop = mopup_targets(graph, room, reach)[:4]
        coarse_done = team_done or (not vant and not mop)
        opens = ([r["id"] for r in graph.openables_closed(rid)]
                 if i_open else [])
        fine_todo = uncovered_fine(graph, room) if i_fine else []
        fine_land = (fine_landings(graph, room, fine_range, bfs, reach=reach)
                     if i_fine and coarse_done and fine_todo else [])
        penalty = 0
        for d in house.doors_of(rid):
            if d.id in recent_set and current_room in (d.room_a, d.room_b):
                penalty = 1
        st = graph.rooms[rid]
        docket[rid] = {
            "coarse_targets": [list(c) for c in (vant + mop)[:4]],
            "coarse_done": coarse_done,
            "opens": opens,
            "fine_remaining": len(fine_todo),
            "fine_landings": [list(c) for c in fine_land],
            "hops": graph.room_hops(current_room, rid),
            "recent_door_penalty": penalty,
            "status": st["status"],
            "claimants": list(st["claimants"]),
        }
    return docket
