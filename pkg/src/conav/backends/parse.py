"""Strict parsing and validation of backend replies.

Replies may wrap their JSON body in prose; the first well-formed JSON
object found in the text is taken. Strategy and plan payloads are then
validated against the schemas the planners rely on, with entity existence
and skill legality checked for plans so a hallucinated id or an
impossible step is rejected before it reaches the executor.
"""

from __future__ import annotations

import json

from conav.config import MAX_PLAN_STEPS

ROLES = ("scout", "opener", "fine_searcher", "searcher", "support")
DISTRIBUTIONS = ("partition_rooms", "scout_and_call", "uniform_split",
                 "custom")
FUNCTIONS = ("navigate_to", "open_object", "close_object", "look_around",
             "done")
TARGET_KINDS = ("room", "door", "receptacle", "cell")


class ParseError(Exception):
    """No well-formed JSON object could be extracted from the reply."""


class ValidationError(Exception):
    """The JSON parsed but violates the schema or references bad entities."""


def extract_json(text: str) -> dict:
    """First well-formed JSON object embedded in the text."""
    decoder = json.JSONDecoder()
    idx = text.find("{")
    while idx != -1:
        try:
            obj, _ = decoder.raw_decode(text, idx)
        except ValueError:
            idx = text.find("{", idx + 1)
            continue
        if isinstance(obj, dict):
            return obj
        idx = text.find("{", idx + 1)
    raise ParseError("no JSON object found in response")


def _require(cond: bool, why: str) -> None:
    if not cond:
        raise ValidationError(why)


def parse_strategy(text: str, agent_ids: list[str],
                   room_ids: list[str]) -> dict:
    """Validate a strategy reply; returns the normalized payload dict."""
    obj = extract_json(text)
    _require(isinstance(obj.get("revision"), int) and obj["revision"] >= 1,
             "revision must be an integer >= 1")
    dist = obj.get("task_distribution")
    _require(isinstance(dist, str)
             and (dist in DISTRIBUTIONS or dist.startswith("custom:")),
             f"task_distribution must be one of {DISTRIBUTIONS}")
    roles = obj.get("roles")
    _require(isinstance(roles, dict), "roles must be a mapping")
    _require(sorted(roles) == sorted(agent_ids),
             "roles must cover every team member exactly once")
    known_rooms = set(room_ids)
    for aid, entry in roles.items():
        _require(isinstance(entry, dict), f"role entry for {aid} not a dict")
        _require(entry.get("role_name") in ROLES,
                 f"unknown role for {aid}: {entry.get('role_name')!r}")
        directives = entry.get("directives", [])
        _require(isinstance(directives, list)
                 and all(isinstance(d, str) for d in directives),
                 f"directives for {aid} must be a list of strings")
        rooms = entry.get("rooms", [])
        _require(isinstance(rooms, list), f"rooms for {aid} must be a list")
        for rid in rooms:
            _require(rid in known_rooms, f"unknown room {rid!r} for {aid}")
    comm_rules = obj.get("comm_rules", [])
    _require(isinstance(comm_rules, list), "comm_rules must be a list")
    for rule in comm_rules:
        _require(isinstance(rule, dict)
                 and all(k in rule for k in
                         ("trigger", "message_kind", "recipients")),
                 "each comm rule needs trigger, message_kind, recipients")
    return {
        "revision": obj["revision"],
        "task_distribution": dist,
        "roles": {aid: {
            "role_name": roles[aid]["role_name"],
            "directives": list(roles[aid].get("directives", [])),
            "rooms": list(roles[aid].get("rooms", [])),
        } for aid in sorted(roles)},
        "comm_rules": [dict(r) for r in comm_rules],
    }


def parse_plan(text: str, graph_snapshot: dict, skills,
               room_ids: list[str]) -> dict:
    """Validate a plan reply against the agent's graph and skills.

    graph_snapshot is a serialized scene graph (or subgraph); entity
    references must exist there, room references in the blueprint.
    """
    obj = extract_json(text)
    steps = obj.get("steps")
    _require(isinstance(steps, list) and steps, "steps must be non-empty")
    _require(len(steps) <= MAX_PLAN_STEPS,
             f"plans are limited to {MAX_PLAN_STEPS} steps")
    known_entities = set(graph_snapshot.get("entities", {}))
    known_rooms = set(room_ids)
    known_doors = {d["id"] for d in graph_snapshot.get("doors", [])}
    out_steps = []
    for i, step in enumerate(steps):
        _require(isinstance(step, dict), f"step {i} is not a dict")
        fn = step.get("function")
        _require(fn in FUNCTIONS, f"step {i}: unknown function {fn!r}")
        expl = step.get("explanation")
        _require(isinstance(expl, str) and expl.strip(),
                 f"step {i}: explanation must be non-empty")
        entry: dict = {"function": fn, "explanation": expl}
        if fn == "navigate_to":
            kind = step.get("target_kind")
            _require(kind in TARGET_KINDS,
                     f"step {i}: bad target_kind {kind!r}")
            target = step.get("target")
            if kind == "room":
                _require(target in known_rooms,
                         f"step {i}: unknown room {target!r}")
            elif kind == "door":
                _require(target in known_doors,
                         f"step {i}: unknown door {target!r}")
            elif kind == "receptacle":
                _require(target in known_entities,
                         f"step {i}: unknown receptacle {target!r}")
            else:
                _require(isinstance(target, list) and len(target) == 2
                         and all(isinstance(v, int) for v in target),
                         f"step {i}: cell target must be [x, y]")
                target = list(target)
            entry["target_kind"] = kind
            entry["target"] = target
        elif fn in ("open_object", "close_object"):
            oid = step.get("object_id")
            _require(oid in known_entities,
                     f"step {i}: unknown object {oid!r}")
            _require(skills.manipulation,
                     f"step {i}: {fn} requires the manipulation skill")
            entry["object_id"] = oid
        out_steps.append(entry)
    return {"steps": out_steps}
