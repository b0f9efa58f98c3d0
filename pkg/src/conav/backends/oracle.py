"""Scripted planner used for offline runs and as the repair fallback.

It answers from the structured context attached to each prompt document
(the same facts the rendered text shows a language model) with a fixed,
fully deterministic policy, so benchmark runs are reproducible without a
network. Replies are ordinary JSON text and go through the same parsing
and validation as a remote model's replies.
"""

from __future__ import annotations

from conav.backends.base import PlannerBackend, PromptDocument
from conav.config import MAX_PLAN_STEPS
from conav.sim.types import NOMINAL
from conav.util import canonical_json

_COMM_RULES = [
    {"trigger": "plan commits to an unclaimed room",
     "message_kind": "room_claim", "recipients": "all"},
    {"trigger": "room sweep completed",
     "message_kind": "room_visited", "recipients": "all"},
    {"trigger": "closed furniture seen and I cannot open it",
     "message_kind": "sighting", "recipients": "all"},
    {"trigger": "target category seen",
     "message_kind": "sighting", "recipients": "all"},
    {"trigger": "room needs a close-range pass I cannot do",
     "message_kind": "assist_request", "recipients": "all"},
    {"trigger": "hardware condition changed",
     "message_kind": "condition_change", "recipients": "all"},
]

_DIRECTIVES = {
    "scout": [
        "Sweep your rooms with spaced look_around scans.",
        "Report each finished room so nobody repeats it.",
        "Hand anything you cannot open or inspect to a teammate.",
    ],
    "opener": [
        "Answer open requests before anything else.",
        "Open closed furniture, then scan what is inside.",
        "Sweep your own rooms between requests.",
    ],
    "fine_searcher": [
        "Answer close-range search requests before anything else.",
        "Re-scan cells near furniture for small objects.",
        "Sweep your own rooms between requests.",
    ],
    "searcher": [
        "Sweep your rooms with spaced look_around scans.",
        "Report finished rooms and target sightings.",
    ],
    "support": [
        "Stand by; conserve the battery.",
        "Answer a request only if no teammate can.",
    ],
}


def _role_for(skills: str) -> str:
    if "M" in skills:
        return "opener"
    if "H" in skills:
        return "fine_searcher"
    return "searcher"


def _role_entry(role: str, rooms: list[str]) -> dict:
    return {"role_name": role, "directives": list(_DIRECTIVES[role]),
            "rooms": list(rooms)}


def _pick_scout(active: list[dict]) -> str:
    """Replacement scout: prefer fast, spare the only close-range camera."""
    with_h = [t for t in active if "H" in t["skills"]]
    sole_h = with_h[0]["agent_id"] if len(with_h) == 1 else None

    def key(t: dict) -> tuple:
        return (0 if "F" in t["skills"] else 1,
                1 if t["agent_id"] == sole_h else 0,
                t["agent_id"])

    return min(active, key=key)["agent_id"]


def _deal_rooms(agent_ids: list[str], rooms: list[str],
                hops: dict[str, dict[str, int]],
                weights: dict[str, int] | None = None) -> dict[str, list[str]]:
    """Balanced room assignment that keeps each agent on its own side.

    Quotas follow the weights by largest remainder; then rooms are
    auctioned nearest first, each going to the closest agent that still
    has quota. Agents without a known position only get leftovers.
    """
    far = 1 << 20
    w = {aid: (weights or {}).get(aid, 1) for aid in agent_ids}
    total = sum(w.values())
    share = {aid: len(rooms) * w[aid] / total for aid in agent_ids}
    quota = {aid: int(share[aid]) for aid in agent_ids}
    spare = len(rooms) - sum(quota.values())
    for aid in sorted(agent_ids, key=lambda a: (quota[a] - share[a], a)):
        if spare <= 0:
            break
        quota[aid] += 1
        spare -= 1

    def hop(aid: str, rid: str) -> int:
        d = hops.get(rid, {}).get(aid)
        return d if d is not None else far

    out: dict[str, list[str]] = {aid: [] for aid in agent_ids}
    ordered = sorted(rooms,
                     key=lambda r: (min(hop(a, r) for a in agent_ids), r))
    for rid in ordered:
        ranked = sorted(agent_ids, key=lambda a: (hop(a, rid), a))
        aid = next((a for a in ranked if len(out[a]) < quota[a]), ranked[0])
        out[aid].append(rid)
    return out


class OraclePlanner(PlannerBackend):
    """Deterministic strategy and plan generator."""

    def deterministic(self) -> bool:
        return True

    def complete(self, prompt: PromptDocument) -> str:
        if prompt.role == "strategy":
            return canonical_json(self._strategy(prompt.context))
        if prompt.role == "local":
            return canonical_json(self._plan(prompt.context))
        raise ValueError(f"unknown prompt role {prompt.role!r}")

    # ------------------------------------------------------------------
    # team strategy

    def _strategy(self, ctx: dict) -> dict:
        team = sorted(ctx["team"], key=lambda t: t["agent_id"])
        rooms = sorted(r["id"] for r in ctx["rooms"])
        hops = {r["id"]: dict(r.get("hops", {})) for r in ctx["rooms"]}
        revision = ctx["revision"]
        previous = ctx.get("previous")

        if len(team) == 1:
            aid = team[0]["agent_id"]
            return {"revision": revision,
                    "task_distribution": "uniform_split",
                    "roles": {aid: _role_entry("searcher", rooms)},
                    "comm_rules": []}

        active = [t for t in team if t["condition"] == NOMINAL] or list(team)
        active_ids = {t["agent_id"] for t in active}
        labels = {t["skills"] for t in active}
        fast = [t for t in active if "F" in t["skills"]]
        roles: dict[str, dict] = {}

        prev_scout = None
        if previous and previous["task_distribution"] == "scout_and_call":
            for aid in sorted(previous["roles"]):
                if previous["roles"][aid]["role_name"] == "scout":
                    prev_scout = aid
                    break

        if prev_scout is not None and prev_scout not in active_ids:
            # The scout slowed down. Benching it or handing the whole
            # sweep to one healthy agent both serialize the search, so
            # spread the rooms over everyone instead: the degraded agent
            # keeps a reduced share and a healthy agent takes the baton.
            dist = "scout_and_call"
            scout = _pick_scout(active)
            everyone = sorted(t["agent_id"] for t in team)
            weights = {t["agent_id"]:
                       (2 if "F" in t["skills"] and t["condition"] == NOMINAL
                        else 1)
                       for t in team}
            deal = _deal_rooms(everyone, rooms, hops, weights)
            for t in team:
                aid = t["agent_id"]
                role = "scout" if aid == scout else _role_for(t["skills"])
                roles[aid] = _role_entry(role, deal[aid])
        elif len(labels) == 1:
            dist = "uniform_split"
            deal = _deal_rooms(sorted(active_ids), rooms, hops)
            for t in active:
                aid = t["agent_id"]
                roles[aid] = _role_entry("searcher", deal[aid])
        elif len(fast) == 1:
            dist = "scout_and_call"
            scout = fast[0]["agent_id"]
            for t in active:
                aid = t["agent_id"]
                if aid == scout:
                    roles[aid] = _role_entry("scout", rooms)
                else:
                    roles[aid] = _role_entry(_role_for(t["skills"]), [])
        else:
            dist = "partition_rooms"
            weights = {t["agent_id"]: (2 if "F" in t["skills"] else 1)
                       for t in active}
            deal = _deal_rooms(sorted(active_ids), rooms, hops, weights)
            for t in active:
                aid = t["agent_id"]
                roles[aid] = _role_entry(_role_for(t["skills"]), deal[aid])

        for t in team:
            aid = t["agent_id"]
            if aid not in roles:
                roles[aid] = _role_entry("support", [])
        return {"revision": revision, "task_distribution": dist,
                "roles": roles, "comm_rules": [dict(r) for r in _COMM_RULES]}

    # ------------------------------------------------------------------
    # short-horizon plan

    def _plan(self, ctx: dict) -> dict:
        if not ctx["targets_remaining"]:
            return _steps([_done("every target category has been found")])

        role = ctx.get("role_name", "searcher")
        docket = ctx["docket"]
        steps: list[dict] = []

        def room_work() -> None:
            for rid in self._room_order(ctx):
                if len(steps) >= MAX_PLAN_STEPS:
                    return
                self._work_room(steps, rid, docket[rid])

        def assist_work() -> None:
            for item in ctx.get("assists", []):
                if len(steps) >= MAX_PLAN_STEPS:
                    return
                self._work_assist(steps, item, docket)

        if role == "scout":
            room_work()
            assist_work()
        elif role == "support":
            assist_work()
        else:
            assist_work()
            room_work()

        if steps:
            return _steps(steps[:MAX_PLAN_STEPS])
        if role == "support":
            return _steps([_done("standing by for requests")])
        fallback = ctx.get("fallback_room")
        if fallback:
            return _steps([
                {"function": "navigate_to", "target_kind": "room",
                 "target": fallback,
                 "explanation": "no owned work left; head for the least "
                                "scanned room"},
                {"function": "look_around",
                 "explanation": "scan it in case something was missed"},
            ])
        return _steps([_done("nothing actionable remains for me")])

    def _room_order(self, ctx: dict) -> list[str]:
        docket = ctx["docket"]
        mine = set(ctx.get("my_rooms", []))

        def has_work(row: dict) -> bool:
            return bool(row["coarse_targets"] or row["opens"]
                        or row["fine_landings"])

        def prio(rid: str) -> tuple:
            row = docket[rid]
            return (row["hops"], row["recent_door_penalty"], rid)

        work = [rid for rid in sorted(docket) if has_work(docket[rid])]
        assigned = sorted((r for r in work if r in mine), key=prio)
        unclaimed = sorted((r for r in work if r not in mine
                            and not docket[r]["claimants"]), key=prio)
        rest = sorted((r for r in work if r not in mine
                       and docket[r]["claimants"]), key=prio)
        return assigned + unclaimed + rest

    def _work_room(self, steps: list[dict], rid: str, row: dict) -> None:
        if row["coarse_targets"]:
            for cell in row["coarse_targets"]:
                if len(steps) + 2 > MAX_PLAN_STEPS:
                    return
                steps.append({
                    "function": "navigate_to", "target_kind": "cell",
                    "target": list(cell),
                    "explanation": f"next sweep vantage in {rid}"})
                steps.append({
                    "function": "look_around",
                    "explanation": f"scan {rid} from there"})
            return
        for oid in row["opens"]:
            if len(steps) + 3 > MAX_PLAN_STEPS:
                return
            steps.extend(_open_steps(oid, rid))
        for cell in row["fine_landings"]:
            if len(steps) + 2 > MAX_PLAN_STEPS:
                return
            steps.extend(_fine_steps(cell, rid))

    def _work_assist(self, steps: list[dict], item: dict,
                     docket: dict) -> None:
        rid = item["room_id"]
        if item["kind"] == "open":
            if len(steps) + 3 <= MAX_PLAN_STEPS:
                steps.extend(_open_steps(item["object_id"], rid,
                                         requested=True))
            return
        row = docket.get(rid)
        if row is None:
            return
        for cell in row["fine_landings"]:
            if len(steps) + 2 > MAX_PLAN_STEPS:
                return
            steps.extend(_fine_steps(cell, rid, requested=True))


def _steps(steps: list[dict]) -> dict:
    return {"steps": steps}


def _done(why: str) -> dict:
    return {"function": "done", "explanation": why}


def _open_steps(oid: str, rid: str, requested: bool = False) -> list[dict]:
    tail = "as requested" if requested else f"while working {rid}"
    return [
        {"function": "navigate_to", "target_kind": "receptacle",
         "target": oid, "explanation": f"reach {oid} {tail}"},
        {"function": "open_object", "object_id": oid,
         "explanation": "it is closed and could hold a target"},
        {"function": "look_around",
         "explanation": "scan what the open furniture reveals"},
    ]


def _fine_steps(cell: list, rid: str, requested: bool = False) -> list[dict]:
    why = ("a teammate asked for a close-range pass"
           if requested else "small objects hide near furniture")
    return [
        {"function": "navigate_to", "target_kind": "cell",
         "target": list(cell),
         "explanation": f"close-range landing in {rid}"},
        {"function": "look_around", "explanation": why},
    ]
