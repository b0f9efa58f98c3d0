"""Prompt assembly for the two planner levels.

Section order is fixed: strategy prompts carry [task_statement,
skills_and_conditions, strategy_request, tips]; local prompts carry
[feedback, summary, local_scene_graph, communication_messages, request].
Ablation flags replace a dropped section's text with "(omitted)" so the
section count never changes. Every assembled document also carries a
structured context dict, which is what the deterministic oracle backend
reads; a remote model sees only the rendered text.
"""

from __future__ import annotations

from importlib import resources

from conav.backends.base import PromptDocument, PromptSection
from conav.config import AblationFlags


class MissingProfile(Exception):
    """A team member's background has not been received yet."""


def _asset(name: str) -> str:
    return (resources.files("conav.data") / name).read_text(
        encoding="utf-8").strip()


STRATEGY_SCHEMA_HINT = """\
Reply with one JSON object:
{
  "revision": <integer, starting at 1>,
  "task_distribution": "partition_rooms" | "scout_and_call" | "uniform_split" | "custom:<text>",
  "roles": {
    "<agent_id>": {
      "role_name": "scout" | "opener" | "fine_searcher" | "searcher" | "support",
      "directives": ["<rule text>", ...],
      "rooms": ["<room_id>", ...]
    }, ... one entry per robot ...
  },
  "comm_rules": [
    {"trigger": "<when>", "message_kind": "<kind>", "recipients": "all"}, ...
  ]
}"""

PLAN_SCHEMA_HINT = """\
Reply with one JSON object:
{
  "steps": [
    {"function": "navigate_to", "target_kind": "room" | "door" | "receptacle" | "cell",
     "target": "<id>" or [x, y], "explanation": "<why>"},
    {"function": "open_object" | "close_object", "object_id": "<receptacle_id>", "explanation": "<why>"},
    {"function": "look_around", "explanation": "<why>"},
    {"function": "done", "explanation": "<why>"}
  ]
}
At most 8 steps; every step needs a non-empty explanation."""


def assemble_strategy_prompt(team_ids: list[str],
                             backgrounds: dict[str, dict],
                             rooms: list[dict],
                             target_categories: list[str],
                             revision: int,
                             previous: dict | None = None) -> PromptDocument:
    """Build the strategy request from exchanged background messages."""
    missing = [a for a in team_ids if a not in backgrounds]
    if missing:
        raise MissingProfile(f"no background for {missing}")

    task_lines = [_asset("prompt_task.txt"), ""]
    task_lines.append("Target categories: "
                      + ", ".join(target_categories))
    task_lines.append("Rooms, with walking distance per agent:")
    for r in rooms:
        hops = r.get("hops", {})
        dist = ", ".join(f"{aid}={hops[aid]}" for aid in sorted(hops))
        task_lines.append(f"  {r['id']} ({r['kind']})"
                          + (f": {dist}" if dist else ""))

    skill_lines = []
    for aid in sorted(team_ids):
        bg = backgrounds[aid]
        skill_lines.append(f"{aid}: skills={bg['skills']}, "
                           f"condition={bg['condition']}")
    if previous is not None:
        skill_lines.append("")
        skill_lines.append(f"A previous strategy (revision "
                           f"{previous['revision']}, "
                           f"{previous['task_distribution']}) is being "
                           f"revised after a condition change.")

    sections = [
        PromptSection("task_statement", "\n".join(task_lines)),
        PromptSection("skills_and_conditions", "\n".join(skill_lines)),
        PromptSection("strategy_request",
                      _asset("prompt_strategy_request.txt")),
        PromptSection("tips", _asset("prompt_tips.txt")),
    ]
    context = {
        "team": [{"agent_id": aid,
                  "skills": backgrounds[aid]["skills"],
                  "condition": backgrounds[aid]["condition"]}
                 for aid in sorted(team_ids)],
        "rooms": [dict(r) for r in rooms],
        "target_categories": list(target_categories),
        "revision": revision,
        "previous": previous,
    }
    return PromptDocument(role="strategy", sections=sections,
                          schema_hint=STRATEGY_SCHEMA_HINT, context=context)


def assemble_local_prompt(feedback_text: str, summary_text: str,
                          subgraph_text: str, messages_text: str,
                          context: dict,
                          ablations: AblationFlags | None = None
                          ) -> PromptDocument:
    """Build the per-replan local request in its fixed section order."""
    ab = ablations or AblationFlags()
    sections = [
        PromptSection("feedback",
                      "(omitted)" if ab.no_feedback else feedback_text),
        PromptSection("summary",
                      "(omitted)" if ab.no_summary else summary_text),
        PromptSection("local_scene_graph", subgraph_text),
        PromptSection("communication_messages", messages_text),
        PromptSection("request", _asset("prompt_local_request.txt")),
    ]
    ctx = dict(context)
    if ab.no_feedback:
        ctx.pop("feedback", None)
    if ab.no_summary:
        ctx.pop("summary", None)
    return PromptDocument(role="local", sections=sections,
                          schema_hint=PLAN_SCHEMA_HINT, context=ctx)
