"""The per-agent planner stack: graph, strategy, local plans, execution.

One PlannerStack drives one robot. It owns the agent's scene graph, plays
the message protocol, asks its backend for strategies and plans, and
turns plans into primitives through the executor. Everything it knows
comes from the a-priori floor plan, its own observations, and teammates'
messages; it never peeks at simulator state.

Tick protocol (collaborative): tick 0 everyone broadcasts a Background
and stops; tick 1 the elected strategist asks its backend for a strategy,
broadcasts it, applies it, and stops; everyone else applies it from their
inbox at tick 2 and starts planning. Independent agents skip all of that
and plan for themselves from tick 0 with an inert bus.
"""

from __future__ import annotations

import hashlib
from collections import deque
from pathlib import Path

from conav import comms
from conav.backends.base import PromptDocument, PromptSection
from conav.backends.oracle import OraclePlanner
from conav.backends.parse import ParseError, ValidationError, parse_plan, \
    parse_strategy
from conav.backends.prompts import assemble_local_prompt, \
    assemble_strategy_prompt
from conav.config import DOOR_MEMORY, RunSettings
from conav.gridcore import bfs_dist, safe_landing_mask
from conav.planning.action import Executor
from conav.planning.local import Feedback, StepPlan, Summary, \
    coarse_vantages, landing_bits, mopup_targets, room_docket, uncovered_fine
from conav.planning.strategy import CollabStrategy, elect_strategist
from conav.scene_graph import CLAIMED, VISITED, LocalSceneGraph
from conav.sim.types import NOMINAL, STOP, PrimitiveAction
from conav.util import HEADINGS
from conav.world.types import DOOR


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


class PlannerStack:
    """Decision layer for one agent; see the module docstring."""

    def __init__(self, house, episode, profile, team_ids, target_categories,
                 bus, trace, backend, mode: str,
                 settings: RunSettings | None = None):
        self.house = house
        self.profile = profile
        self.agent_id = profile.agent_id
        self.team_ids = sorted(team_ids)
        self.target_categories = sorted(target_categories)
        self.bus = bus
        self.trace = trace
        self.backend = backend
        self.mode = mode
        self.settings = settings or RunSettings()
        self.strategist_id = elect_strategist(self.team_ids, episode.seed)

        self.graph = LocalSceneGraph(house, self.agent_id,
                                     fine_range=profile.detect_range_small)
        self.executor = Executor(self.graph, profile)
        self.strategy: CollabStrategy | None = None
        self.plan: StepPlan | None = None
        self.found: dict[str, str] = {}
        self.assists: list[dict] = []
        self.transcripts: list[dict] = []
        self.recent_doors: deque[str] = deque(maxlen=DOOR_MEMORY)

        self._plan_seq = 0
        self._llm_seq = 0
        self._background_sent = False
        self._regen_at: int | None = None
        self._assist_keys: set[tuple] = set()
        self._sighted: set[str] = set()
        self._found_sent: set[str] = set()
        self._fine_asked: set[str] = set()
        self._claims_sent: set[str] = set()
        self._recent_steps: deque[str] = deque(maxlen=8)
        self._unshown: list[comms.Envelope] = []
        self._last_obs = None

        bus.register(self.agent_id)

    # ------------------------------------------------------------------
    # capability views

    def _i_open(self) -> bool:
        return self.profile.skills.manipulation

    def _i_fine(self) -> bool:
        """Do close-range passes myself unless a healthy teammate owns them."""
        if self.profile.skills.high_res_camera:
            return True
        return self._fine_owner() is None

    def _fine_owner(self) -> str | None:
        """Lowest-id teammate known to be nominal with the H skill."""
        for aid in self.team_ids:
            if aid == self.agent_id:
                continue
            skills = self.graph.peer_fact(aid, "skills") or ""
            condition = self.graph.peer_fact(aid, "condition")
            if "H" in skills and condition == NOMINAL:
                return aid
        return None

    def _can_assist(self, skill: str) -> bool:
        if self.profile.condition != NOMINAL:
            return False
        if skill == "M":
            return self.profile.skills.manipulation
        if skill == "H":
            return self.profile.skills.high_res_camera
        if skill == "F":
            return self.profile.skills.fast
        return False

    # ------------------------------------------------------------------
    # engine protocol

    def begin_turn(self, tick: int) -> None:
        if self.mode != "collaborative":
            return
        for env in self.bus.drain(self.agent_id):
            self._handle_envelope(env)

    def ingest(self, obs) -> None:
        self._last_obs = obs
        if not self._background_sent:
            self._background_sent = True
            self._send_background(obs.tick)
        changed = self.graph.ingest_observation(obs)
        self._track_door(obs.cell)
        for rec in changed:
            if (rec["kind"] == "receptacle" and rec["openable"]
                    and not rec["open_state"] and not self._i_open()
                    and rec["id"] not in self._sighted):
                self._sighted.add(rec["id"])
                self._send(obs.tick, comms.Sighting(
                    sender=self.agent_id, category=rec["category"],
                    entity_id=rec["id"], room_id=rec["room_id"],
                    cell=tuple(rec["cell"]), needs_assist="M"))
        for cat in obs.detections:
            if cat in self.found:
                continue
            ent = next((v for v in sorted(obs.visible,
                                          key=lambda v: v.entity_id)
                        if v.category == cat), None)
            room_id = ent.room_id if ent else None
            self.found[cat] = room_id
            if cat not in self._found_sent and ent is not None:
                self._found_sent.add(cat)
                self._send(obs.tick, comms.Sighting(
                    sender=self.agent_id, category=cat,
                    entity_id=ent.entity_id, room_id=room_id,
                    cell=tuple(ent.cell), needs_assist=None))
        if obs.surround:
            rid = self.house.room_of(obs.cell)
            if rid is not None:
                self._maybe_finish_room(rid, obs.tick, obs)

    def decide(self, tick: int) -> PrimitiveAction:
        if self.mode == "collaborative":
            if self.strategy is None:
                if tick >= 1 and self.agent_id == self.strategist_id:
                    self._generate_strategy(tick)
                return PrimitiveAction(STOP)
            if self._regen_at is not None and tick >= self._regen_at:
                self._regen_at = None
                if (self.agent_id == self.strategist_id
                        and not self.settings.ablations.no_adapt):
                    self._generate_strategy(tick)
                    return PrimitiveAction(STOP)
        elif self.strategy is None:
            self._generate_strategy(tick)

        obs = self._last_obs
        for _ in range(2):
            if (self.plan is None or self.executor.exhausted
                    or tick - self.plan.based_on_tick
                    >= self.settings.replan_period):
                self._replan(tick, obs)
            action = self.executor.next_action(obs.cell, obs.heading, tick)
            if action is not None:
                return action
        return PrimitiveAction(STOP)

    def after_action(self, tick: int, action: PrimitiveAction,
                     outcome) -> None:
        self.executor.note_outcome(action, outcome)
        self._recent_steps.append(f"{action.kind}: {outcome.result}")

    def on_condition_event(self, event) -> None:
        # The engine already flipped my profile; react and tell the team.
        self.executor.invalidate_motion()
        if self.plan is not None and not self.executor.exhausted:
            self.executor.abort("hardware condition changed")
        # Teammates answer the change notice with fresh positions at
        # tick+1, so a regeneration at tick+2 sees everyone's whereabouts.
        self._regen_at = event.tick + 2
        self._send(event.tick, comms.ConditionChange(
            sender=self.agent_id, new_condition=event.set_condition))
        self._send_background(event.tick)

    def _send_background(self, tick: int) -> None:
        cell = (tuple(self._last_obs.cell)
                if self._last_obs is not None else None)
        self._send(tick, comms.Background(
            sender=self.agent_id, skills=self.profile.skills.label(),
            condition=self.profile.condition, cell=cell))

    # ------------------------------------------------------------------
    # messaging

    def _send(self, tick: int, message) -> None:
        if self.mode == "collaborative":
            self.bus.send(tick, message)

    def _handle_envelope(self, env: comms.Envelope) -> None:
        self.graph.merge_remote_knowledge(env)
        self._unshown.append(env)
        msg = env.message
        if isinstance(msg, comms.StrategyBroadcast):
            self._apply_strategy(CollabStrategy.from_obj(msg.strategy))
        elif isinstance(msg, comms.ConditionChange):
            # Answer with a fresh position so the strategist's rebalance
            # starts everyone from where they actually are.
            self._send_background(env.send_tick + 1)
            if self.agent_id == self.strategist_id:
                self._regen_at = env.send_tick + 2
        elif isinstance(msg, comms.Sighting):
            if msg.needs_assist is None:
                if msg.category in self.target_categories:
                    self.found.setdefault(msg.category, msg.room_id)
            elif msg.needs_assist == "M" and self._can_assist("M"):
                self._queue_assist({"kind": "open",
                                    "object_id": msg.entity_id,
                                    "room_id": msg.room_id})
        elif isinstance(msg, comms.AssistRequest):
            if msg.to not in ("all", self.agent_id):
                return
            if not self._can_assist(msg.skill_needed):
                return
            if msg.skill_needed == "H":
                self._queue_assist({"kind": "fine", "room_id": msg.room_id})
            elif msg.skill_needed == "M" and msg.detail.get("object_id"):
                self._queue_assist({"kind": "open",
                                    "object_id": msg.detail["object_id"],
                                    "room_id": msg.room_id})

    def _queue_assist(self, item: dict) -> None:
        key = (item["kind"], item.get("object_id"), item["room_id"])
        if key not in self._assist_keys:
            self._assist_keys.add(key)
            self.assists.append(item)

    def _prune_assists(self) -> None:
        keep = []
        for item in self.assists:
            if item["kind"] == "open":
                rec = self.graph.record(item["object_id"])
                if rec is not None and rec["openable"] and rec["open_state"]:
                    continue
            else:
                room = self.house.room_by_id(item["room_id"])
                if not uncovered_fine(self.graph, room):
                    continue
            keep.append(item)
        self.assists = keep

    def _reach_mask(self, cell, heading: str) -> bytes:
        """Cells this agent can stop on without losing access to anything.

        At speed 2 some reachable cells are one-way: driving onto them
        forfeits rooms or furniture approaches for good. Landings are
        restricted to the access-preserving set.
        """
        g = self.house.grid
        return safe_landing_mask(
            bytes(self.graph.passable_mask()), g.width, g.height,
            cell[0], cell[1], HEADINGS.index(heading),
            self.profile.speed_cells_per_tick, landing_bits(self.graph))

    def _maybe_finish_room(self, rid: str, tick: int, obs) -> None:
        if rid in self.graph.coarse_done:
            return
        room = self.house.room_by_id(rid)
        reach = self._reach_mask(obs.cell, obs.heading)
        if (coarse_vantages(self.graph, room, reach)
                or mopup_targets(self.graph, room, reach)):
            return
        self.graph.mark_coarse_done(rid)
        self._send(tick, comms.RoomVisited(sender=self.agent_id,
                                           room_id=rid))
        # If small-object coverage is someone else's job, hand it over with
        # the furniture positions they will need.
        if self._i_fine() or rid in self._fine_asked:
            return
        if not uncovered_fine(self.graph, room):
            return
        owner = self._fine_owner()
        if owner is None:
            return
        self._fine_asked.add(rid)
        for rec in self.graph.receptacles_in(rid):
            if rec["id"] not in self._sighted:
                self._sighted.add(rec["id"])
                self._send(tick, comms.Sighting(
                    sender=self.agent_id, category=rec["category"],
                    entity_id=rec["id"], room_id=rid,
                    cell=tuple(rec["cell"]), needs_assist="H"))
        self._send(tick, comms.AssistRequest(
            sender=self.agent_id, to=owner, skill_needed="H", room_id=rid,
            detail={"reason": "close-range pass for small objects"}))

    def _track_door(self, cell) -> None:
        if self.house.grid.kind_at(cell) != DOOR:
            return
        for d in self.house.doors:
            if d.cell == tuple(cell):
                if not self.recent_doors or self.recent_doors[-1] != d.id:
                    self.recent_doors.append(d.id)
                return

    # ------------------------------------------------------------------
    # strategy level

    def _roster(self) -> tuple[list[str], dict[str, dict]]:
        my_cell = (list(self._last_obs.cell)
                   if self._last_obs is not None else None)
        if self.mode != "collaborative":
            return [self.agent_id], {self.agent_id: {
                "skills": self.profile.skills.label(),
                "condition": self.profile.condition,
                "cell": my_cell}}
        backgrounds = {self.agent_id: {
            "skills": self.profile.skills.label(),
            "condition": self.profile.condition,
            "cell": my_cell}}
        for aid in self.team_ids:
            if aid == self.agent_id:
                continue
            skills = self.graph.peer_fact(aid, "skills")
            condition = self.graph.peer_fact(aid, "condition")
            cell = self.graph.peer_fact(aid, "cell")
            if skills is not None:
                backgrounds[aid] = {
                    "skills": skills,
                    "condition": condition or NOMINAL,
                    "cell": list(cell) if cell is not None else None}
        return self.team_ids, backgrounds

    def _generate_strategy(self, tick: int) -> None:
        team_ids, backgrounds = self._roster()
        room_ids = sorted(r.id for r in self.house.rooms)
        revision = 1 if self.strategy is None else self.strategy.revision + 1
        previous = None if self.strategy is None else self.strategy.to_obj()
        source = "backend"

        if self.settings.strategy_file and previous is None:
            text = Path(self.settings.strategy_file).read_text(
                encoding="utf-8")
            payload = parse_strategy(text, team_ids, room_ids)
            source = "file"
        else:
            hops = self._room_hops(backgrounds)
            rooms = [{"id": r.id, "kind": r.kind, "hops": hops[r.id]}
                     for r in sorted(self.house.rooms, key=lambda r: r.id)]
            prompt = assemble_strategy_prompt(
                team_ids, backgrounds, rooms, self.target_categories,
                revision, previous)
            payload, fallback = self._complete_with_repair(
                tick, prompt,
                lambda text: parse_strategy(text, team_ids, room_ids))
            if fallback:
                source = "fallback"
        payload["revision"] = revision

        self.trace.add(tick, self.agent_id, "strategy", {
            "revision": revision,
            "task_distribution": payload["task_distribution"],
            "source": source,
        })
        self._send(tick, comms.StrategyBroadcast(
            sender=self.agent_id, revision=revision, strategy=payload))
        self._apply_strategy(CollabStrategy.from_obj(payload))

    def _room_hops(self, backgrounds: dict[str, dict]) -> dict[str, dict]:
        """Believed walking distance from each positioned agent to each room.

        Distances come from the shared floor plan, so every agent that
        runs this gets the same numbers and the elected strategist's
        assignment is reproducible by anyone.
        """
        g = self.house.grid
        mask = bytes(self.graph.passable_mask())
        dist_maps = {}
        for aid, bg in backgrounds.items():
            if bg.get("cell") is not None:
                x, y = bg["cell"]
                dist_maps[aid] = bfs_dist(mask, g.width, g.height, x, y)
        hops: dict[str, dict] = {}
        for room in self.house.rooms:
            idxs = [y * g.width + x for x, y in room.cells()
                    if mask[y * g.width + x]]
            row = {}
            for aid, dmap in dist_maps.items():
                best = min((dmap[i] for i in idxs if dmap[i] >= 0),
                           default=-1)
                if best >= 0:
                    row[aid] = best
            hops[room.id] = row
        return hops

    def _apply_strategy(self, strat: CollabStrategy) -> None:
        if self.strategy is not None and strat.revision <= self.strategy.revision:
            return
        self.strategy = strat
        if self.plan is not None and not self.executor.exhausted:
            self.executor.abort("strategy revised")

    # ------------------------------------------------------------------
    # local plan level

    def _my_rooms(self) -> list[str]:
        rooms = []
        if self.strategy is not None:
            rooms.extend(self.strategy.rooms_of(self.agent_id))
        for rid, st in sorted(self.graph.rooms.items()):
            if self.agent_id in st["claimants"] and rid not in rooms:
                rooms.append(rid)
        return rooms

    def _room_here(self, cell) -> str:
        rid = self.house.room_of(cell)
        if rid is not None:
            return rid
        for d in self.house.doors:
            if d.cell == tuple(cell):
                return d.room_a
        return self.house.rooms[0].id

    def _summary(self) -> Summary:
        visited = {}
        claimed = {}
        for rid, st in sorted(self.graph.rooms.items()):
            if st["status"] >= VISITED and st["visitors"]:
                visited[rid] = sorted(st["visitors"])
            elif st["status"] >= CLAIMED and st["claimants"]:
                claimed[rid] = sorted(st["claimants"])
        return Summary(
            remaining_targets=sorted(set(self.target_categories)
                                     - set(self.found)),
            rooms_visited=visited,
            rooms_claimed=claimed,
            found={k: v for k, v in sorted(self.found.items())
                   if v is not None},
            my_recent_steps=list(self._recent_steps),
            recent_doors=list(self.recent_doors),
        )

    def _replan(self, tick: int, obs) -> None:
        feedback = Feedback(
            plan_id=self.plan.plan_id if self.plan else None,
            outcomes=list(self.executor.feedback_entries),
        )
        self._prune_assists()
        cell = obs.cell
        current_room = self._room_here(cell)
        i_open = self._i_open()
        i_fine = self._i_fine()
        docket = room_docket(self.graph, cell, current_room, i_open, i_fine,
                             self.profile.detect_range_small,
                             list(self.recent_doors),
                             reach=self._reach_mask(cell, obs.heading))
        summary = self._summary()
        role_name = "searcher"
        my_rooms = self._my_rooms()
        task_distribution = "uniform_split"
        if self.strategy is not None:
            role_name = self.strategy.role_of(self.agent_id)
            task_distribution = self.strategy.task_distribution

        fallback_room = min(
            sorted(self.graph.rooms),
            key=lambda rid: (len(self.graph.seen[rid]),
                             docket[rid]["hops"], rid))

        context = {
            "agent_id": self.agent_id,
            "skills": self.profile.skills.label(),
            "condition": self.profile.condition,
            "role_name": role_name,
            "my_rooms": my_rooms,
            "task_distribution": task_distribution,
            "cell": list(cell),
            "heading": obs.heading,
            "current_room": current_room,
            "targets_remaining": summary.remaining_targets,
            "found": dict(summary.found),
            "docket": docket,
            "assists": [dict(a) for a in self.assists],
            "i_open": i_open,
            "i_fine": i_fine,
            "fine_range": self.profile.detect_range_small,
            "fallback_room": fallback_room,
            "feedback": feedback.to_obj(),
            "summary": summary.to_obj(),
        }
        subgraph_text = self.graph.render_text(
            current_room, self.settings.subgraph_radius)
        messages_text = comms.render_messages(self._unshown)
        self._unshown = []
        prompt = assemble_local_prompt(
            feedback.render(), summary.render(), subgraph_text,
            messages_text, context, self.settings.ablations)

        snapshot = {
            "entities": self.graph.entities,
            "doors": [{"id": d.id} for d in self.house.doors],
        }
        room_ids = sorted(r.id for r in self.house.rooms)
        skills = self.profile.skills
        payload, fallback = self._complete_with_repair(
            tick, prompt,
            lambda text: parse_plan(text, snapshot, skills, room_ids))

        self._plan_seq += 1
        plan = StepPlan(plan_id=f"{self.agent_id}-p{self._plan_seq}",
                        based_on_tick=tick, steps=payload["steps"],
                        fallback=fallback)
        self.plan = plan
        self.executor.load(plan)
        self.trace.add(tick, self.agent_id, "plan", plan.to_obj())
        self._claim_committed_rooms(tick, plan, docket)

    def _claim_committed_rooms(self, tick: int, plan: StepPlan,
                               docket: dict) -> None:
        assigned = set(self.strategy.rooms_of(self.agent_id)
                       if self.strategy else [])
        for step in plan.steps:
            if step["function"] != "navigate_to":
                continue
            if step.get("target_kind") != "cell":
                continue
            cell = list(step["target"])
            for rid, row in docket.items():
                if cell in row["coarse_targets"]:
                    if rid in assigned or rid in self._claims_sent:
                        break
                    self._claims_sent.add(rid)
                    self.graph.mark_claimed(rid, self.agent_id)
                    self._send(tick, comms.RoomClaim(sender=self.agent_id,
                                                     room_id=rid))
                    break

    # ------------------------------------------------------------------
    # backend plumbing

    def _invoke(self, tick: int, prompt: PromptDocument, backend) -> str:
        text = backend.complete(prompt)
        self._llm_seq += 1
        rendered = prompt.render()
        self.transcripts.append({
            "seq": self._llm_seq, "tick": tick, "role": prompt.role,
            "backend": backend.name(), "prompt": rendered, "response": text,
        })
        self.trace.add(tick, self.agent_id, "llm", {
            "seq": self._llm_seq, "role": prompt.role,
            "backend": backend.name(),
            "prompt_sha": _sha(rendered), "response_sha": _sha(text),
            "prompt_chars": len(rendered), "response_chars": len(text),
        })
        return text

    def _complete_with_repair(self, tick: int, prompt: PromptDocument,
                              parser) -> tuple[dict, bool]:
        """One try, one repair retry, then the scripted fallback."""
        text = self._invoke(tick, prompt, self.backend)
        try:
            return parser(text), False
        except (ParseError, ValidationError) as first:
            repair = PromptDocument(
                role=prompt.role,
                sections=list(prompt.sections) + [PromptSection(
                    "repair",
                    f"Your previous reply was rejected: {first}. "
                    f"Reply again with exactly one valid JSON object.")],
                schema_hint=prompt.schema_hint,
                context=prompt.context)
            text = self._invoke(tick, repair, self.backend)
            try:
                return parser(text), False
            except (ParseError, ValidationError) as second:
                self.trace.add(tick, self.agent_id, "llm", {
                    "role": prompt.role, "backend": self.backend.name(),
                    "fallback": True, "error": str(second)[:200],
                })
                text = self._invoke(tick, prompt, OraclePlanner())
                return parser(text), True


def make_stack_factory(mode: str, settings: RunSettings | None = None,
                       backend_factory=None):
    """Factory for run_episode; one stack and one backend per agent."""
    settings = settings or RunSettings()
    backend_factory = backend_factory or OraclePlanner

    def factory(sim, profile, bus, trace) -> PlannerStack:
        return PlannerStack(
            house=sim.house,
            episode=sim.episode,
            profile=profile,
            team_ids=sorted(sim.profiles),
            target_categories=list(sim.target_categories),
            bus=bus,
            trace=trace,
            backend=backend_factory(),
            mode=mode,
            settings=settings,
        )

    return factory
