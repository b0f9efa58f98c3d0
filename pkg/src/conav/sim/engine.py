"""Tick engine: poses, action semantics, perception gates, termination.

The engine is a pure function of (house, episode, team, mode, events,
settings): it owns all mutable run state and consults no clocks or global
RNGs, so repeated runs produce byte-identical traces.

Planner stacks are duck-typed. A stack must provide:

    begin_turn(tick)                   called first each tick
    ingest(obs)                        fed every Observation for its agent
    decide(tick) -> PrimitiveAction    one primitive per tick
    after_action(tick, action, outcome)
    on_condition_event(event)          hardware condition changed

run_episode builds one stack per agent via planner_stack_factory(sim=...,
profile=..., bus=..., trace=...).
"""

from __future__ import annotations

from conav.backends.base import BackendFailure
from conav.config import DEGRADED_MOVE_COOLDOWN, RunSettings
from conav.gridcore import los_clear
from conav.sim.trace import EpisodeTrace
from conav.sim.types import (
    CLOSE,
    DEGRADED_BATTERY,
    LOOK_AROUND,
    MOVE_FORWARD,
    OPEN,
    STOP,
    TURN_LEFT,
    TURN_RIGHT,
    ActionOutcome,
    AgentPose,
    AgentProfile,
    ConditionEvent,
    EpisodeState,
    IllegalAction,
    Observation,
    PrimitiveAction,
    VisibleEntity,
)
from conav.util import (
    HEADINGS,
    HEADING_VECS,
    chebyshev,
    in_fov,
    rng_stream,
    turn_left,
    turn_right,
)
from conav.world.types import Episode, House


class Simulation:
    """Ground-truth world state for one episode run.

    Agents never collide: the team is small and cells are coarse, so two
    robots may share a cell and never occlude each other's sight.
    """

    def __init__(self, house: House, episode: Episode,
                 team: list[AgentProfile], budget: int, tick_seconds: float):
        if not 1 <= len(team) <= 4:
            raise ValueError(f"team size must be 1..4, got {len(team)}")
        ids = [p.agent_id for p in team]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate agent ids")
        if len(episode.spawn_cells) < len(team):
            raise ValueError("episode does not carry enough spawn cells")

        self.house = house
        self.episode = episode
        self.budget = budget
        self.tick_seconds = tick_seconds
        self.tick = 0
        self.profiles: dict[str, AgentProfile] = {p.agent_id: p for p in team}

        heading_rng = rng_stream(episode.seed, "headings")
        self.poses: dict[str, AgentPose] = {}
        for i, aid in enumerate(sorted(self.profiles)):
            self.poses[aid] = AgentPose(cell=episode.spawn_cells[i],
                                        heading=heading_rng.choice(HEADINGS))

        self.open_states: dict[str, bool] = {
            r.id: bool(r.open_state) for r in house.receptacles}
        self._rec_index = {r.id: house.grid.index(r.cell)
                           for r in house.receptacles}
        # Sight blockers: walls plus closed receptacle footprints. Kept as a
        # mutable mask so open/close toggles are O(1).
        self._blocked = bytearray(house.grid.blocked_mask())
        for rec_id, is_open in self.open_states.items():
            if is_open:
                self._blocked[self._rec_index[rec_id]] = 0

        self.target_categories = sorted(
            {house.object_by_id(t).category for t in episode.targets})
        self.found_targets: set[str] = set()
        self.found_log: dict[str, dict] = {}
        self.steps: dict[str, int] = {aid: 0 for aid in self.profiles}
        self._next_move_tick = {aid: 0 for aid in self.profiles}
        self._look_tick = {aid: -1 for aid in self.profiles}
        self._status = "running"

    # ------------------------------------------------------------------
    # actions

    def step(self, agent_id: str, action: PrimitiveAction) -> ActionOutcome:
        """Apply one primitive. Never raises for a bad action.

        Every primitive except stop counts as a step for the issuing agent,
        whatever the outcome; wasted motion must show up in the metrics.
        """
        if action.kind != STOP:
            self.steps[agent_id] += 1
        try:
            return self._apply(agent_id, action)
        except IllegalAction as exc:
            return ActionOutcome("illegal", str(exc))

    def _apply(self, agent_id: str, action: PrimitiveAction) -> ActionOutcome:
        pose = self.poses[agent_id]
        prof = self.profiles[agent_id]
        kind = action.kind

        if kind == STOP:
            return ActionOutcome("success")
        if kind == TURN_LEFT:
            pose.heading = turn_left(pose.heading)
            return ActionOutcome("success")
        if kind == TURN_RIGHT:
            pose.heading = turn_right(pose.heading)
            return ActionOutcome("success")
        if kind == LOOK_AROUND:
            self._look_tick[agent_id] = self.tick
            return ActionOutcome("success")
        if kind == MOVE_FORWARD:
            return self._move(agent_id, pose, prof)
        if kind in (OPEN, CLOSE):
            return self._open_close(pose, prof, kind, action.receptacle_id)
        raise IllegalAction(f"unknown action kind {kind!r}")

    def _move(self, agent_id: str, pose: AgentPose,
              prof: AgentProfile) -> ActionOutcome:
        if self.tick < self._next_move_tick[agent_id]:
            return ActionOutcome("blocked", "battery_cooldown")
        dx, dy = HEADING_VECS[pose.heading]
        x, y = pose.cell
        moved = 0
        for _ in range(prof.speed_cells_per_tick):
            nx, ny = x + dx, y + dy
            if not self.house.grid.in_bounds((nx, ny)):
                break
            if not self.house.grid.passable((nx, ny)):
                break
            x, y = nx, ny
            moved += 1
        if moved == 0:
            return ActionOutcome("blocked", "obstructed")
        pose.cell = (x, y)
        if prof.condition == DEGRADED_BATTERY:
            self._next_move_tick[agent_id] = (
                self.tick + 1 + DEGRADED_MOVE_COOLDOWN)
        return ActionOutcome("success", f"moved_{moved}")

    def _open_close(self, pose: AgentPose, prof: AgentProfile,
                    kind: str, rec_id: str) -> ActionOutcome:
        try:
            rec = self.house.receptacle_by_id(rec_id)
        except KeyError:
            raise IllegalAction(f"unknown receptacle {rec_id!r}")
        if not prof.skills.manipulation:
            raise IllegalAction("manipulation skill required")
        if not rec.openable:
            raise IllegalAction(f"{rec.category} is not openable")
        if chebyshev(pose.cell, rec.cell) > 1:
            return ActionOutcome("blocked", "out_of_reach")
        want_open = kind == OPEN
        if self.open_states[rec_id] == want_open:
            return ActionOutcome(
                "blocked", "already_open" if want_open else "already_closed")
        self.open_states[rec_id] = want_open
        self._blocked[self._rec_index[rec_id]] = 0 if want_open else 1
        return ActionOutcome("success")

    def apply_condition(self, event: ConditionEvent) -> None:
        self.profiles[event.agent].condition = event.set_condition

    # ------------------------------------------------------------------
    # perception

    def _sees(self, ax: int, ay: int, cx: int, cy: int,
              rng_limit: int, surround: bool, heading: str) -> bool:
        dx, dy = cx - ax, cy - ay
        if dx == 0 and dy == 0:
            return True
        if max(abs(dx), abs(dy)) > rng_limit:
            return False
        if not surround and not in_fov(dx, dy, heading):
            return False
        g = self.house.grid
        return los_clear(self._blocked, g.width, g.height, ax, ay, cx, cy)

    def perceive(self, agent_id: str) -> Observation:
        """Ground-truth observation under the agent's sensing gates.

        Frustum is 90 degrees around the heading, widened to 360 on a tick
        where the agent issued look_around (its own cell is always seen).
        Small objects need proximity or a high-resolution camera; contained
        objects are never seen while their receptacle is closed. seen_cells
        is only populated on look_around ticks because the sweep planner
        treats a room cell as covered only after a deliberate scan.
        """
        pose = self.poses[agent_id]
        prof = self.profiles[agent_id]
        ax, ay = pose.cell
        surround = self._look_tick[agent_id] == self.tick
        r_norm = prof.detect_range_normal
        r_small = prof.detect_range_small

        visible: list[VisibleEntity] = []
        for rec in self.house.receptacles:
            cx, cy = rec.cell
            if not self._sees(ax, ay, cx, cy, r_norm, surround, pose.heading):
                continue
            visible.append(VisibleEntity(
                entity_id=rec.id, entity_kind="receptacle", cell=rec.cell,
                room_id=self.house.room_of(rec.cell), category=rec.category,
                openable=rec.openable, open_state=self.open_states[rec.id]))
        seen_categories: set[str] = set()
        for obj in self.house.objects:
            if obj.container_id is not None and not self.open_states[obj.container_id]:
                continue
            limit = r_small if obj.size_class == "small" else r_norm
            cx, cy = obj.cell
            if not self._sees(ax, ay, cx, cy, limit, surround, pose.heading):
                continue
            visible.append(VisibleEntity(
                entity_id=obj.id, entity_kind="object", cell=obj.cell,
                room_id=self.house.room_of(obj.cell), category=obj.category,
                size_class=obj.size_class, container_id=obj.container_id))
            seen_categories.add(obj.category)

        detections = sorted(
            seen_categories.intersection(self.target_categories))
        for cat in detections:
            if cat not in self.found_targets:
                self.found_targets.add(cat)
                self.found_log[cat] = {"tick": self.tick, "agent": agent_id}

        seen_cells = []
        if surround:
            g = self.house.grid
            for cy in range(max(0, ay - r_norm), min(g.height, ay + r_norm + 1)):
                for cx in range(max(0, ax - r_norm), min(g.width, ax + r_norm + 1)):
                    if self._sees(ax, ay, cx, cy, r_norm, True, pose.heading):
                        seen_cells.append((cx, cy))

        return Observation(
            tick=self.tick, agent_id=agent_id, cell=pose.cell,
            heading=pose.heading, visible=visible, detections=detections,
            seen_cells=seen_cells, surround=surround)

    # ------------------------------------------------------------------
    # bookkeeping

    def check_termination(self) -> str:
        if self._status == "running":
            if all(c in self.found_targets for c in self.target_categories):
                self._status = "success"
            elif self.tick >= self.budget:
                self._status = "timeout"
        return self._status

    def state(self) -> EpisodeState:
        return EpisodeState(
            tick=self.tick,
            poses={aid: AgentPose(p.cell, p.heading)
                   for aid, p in self.poses.items()},
            open_states=dict(self.open_states),
            found_targets=set(self.found_targets),
            status=self._status,
        )


def run_episode(house: House, episode: Episode, team: list[AgentProfile],
                planner_stack_factory, mode: str = "collaborative",
                events: tuple[ConditionEvent, ...] = (),
                settings: RunSettings | None = None) -> EpisodeTrace:
    """Run one episode to success, timeout, or backend failure.

    Each tick every agent (in sorted id order) observes, decides one
    primitive, and acts; a look_around action earns an immediate 360-degree
    observation. Condition events fire at the start of their tick. In
    independent mode the bus is inert, so traces carry zero messages.
    Success is checked after every observation so a run stops the moment
    the last target category is spotted.
    """
    from conav.comms import MessageBus

    if mode not in ("collaborative", "independent"):
        raise ValueError(f"unknown mode {mode!r}")
    settings = settings or RunSettings()

    sim = Simulation(house, episode, team,
                     budget=settings.tick_budget,
                     tick_seconds=settings.tick_seconds)
    trace = EpisodeTrace(config={
        "house_seed": house.seed,
        "episode_seed": episode.seed,
        "targets": list(episode.targets),
        "target_categories": sim.target_categories,
        "team": [p.to_obj() for p in team],
        "mode": mode,
        "events": [e.to_obj() for e in events],
        "settings": settings.to_json(),
    })
    bus = MessageBus(active=(mode == "collaborative"),
                     on_send=trace.message_event)

    stacks = {}
    for prof in team:
        stacks[prof.agent_id] = planner_stack_factory(
            sim=sim, profile=prof, bus=bus, trace=trace)
    agent_ids = sorted(stacks)

    events_by_tick: dict[int, list[ConditionEvent]] = {}
    for evt in sorted(events, key=lambda e: (e.tick, e.agent)):
        events_by_tick.setdefault(evt.tick, []).append(evt)

    status = "running"
    ticks_used = 0
    try:
        while sim.tick < sim.budget:
            t = sim.tick
            for evt in events_by_tick.get(t, ()):
                sim.apply_condition(evt)
                trace.add(t, evt.agent, "condition", evt.to_obj())
                stacks[evt.agent].on_condition_event(evt)

            for aid in agent_ids:
                stack = stacks[aid]
                stack.begin_turn(t)
                before = set(sim.found_targets)
                obs = sim.perceive(aid)
                stack.ingest(obs)
                _record_detections(trace, obs, before)
                if sim.check_termination() == "success":
                    break

                action = stack.decide(t)
                outcome = sim.step(aid, action)
                trace.add(t, aid, "action", {
                    "action": action.to_obj(),
                    "outcome": outcome.to_obj(),
                    "cell": list(sim.poses[aid].cell),
                    "heading": sim.poses[aid].heading,
                })
                stack.after_action(t, action, outcome)
                if action.kind == LOOK_AROUND and outcome.ok:
                    before = set(sim.found_targets)
                    obs = sim.perceive(aid)
                    stack.ingest(obs)
                    _record_detections(trace, obs, before)
                if sim.check_termination() == "success":
                    break

            if sim.check_termination() == "success":
                status = "success"
                ticks_used = sim.tick + 1
                break
            bus.advance(sim.tick)
            sim.tick += 1
        else:
            status = "timeout"
            ticks_used = sim.budget
    except BackendFailure as exc:
        status = "failure"
        ticks_used = sim.tick
        trace.add(sim.tick, "", "backend_failure",
                  {"error": type(exc).__name__, "detail": str(exc)})

    bus.close()
    trace.finalize(status=status, ticks=ticks_used,
                   tick_seconds=sim.tick_seconds,
                   found=sim.found_log, steps=sim.steps)
    return trace


def _record_detections(trace: EpisodeTrace, obs: Observation,
                       before: set[str]) -> None:
    new = [c for c in obs.detections if c not in before]
    if new:
        trace.add(obs.tick, obs.agent_id, "detection",
                  {"categories": new, "cell": list(obs.cell)})
