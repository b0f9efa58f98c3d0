"""Behavior execution: one plan step at a time, one primitive per tick.

The executor expands each plan step into primitives against the agent's
believed-passable grid, verifies progress from the poses it is handed,
and self-corrects: a surprise obstacle is recorded in the scene graph and
the motion is re-planned; if the step's goal becomes unreachable the plan
is aborted so the local planner can react. Degraded agents interleave a
pause after every move so the battery cooldown never burns a blocked
step.
"""

from __future__ import annotations

from conav.gridcore import motion_plan, safe_landing_mask
from conav.planning.local import landing_bits
from conav.sim.types import (
    CLOSE,
    DEGRADED_BATTERY,
    LOOK_AROUND,
    MOVE_FORWARD,
    OPEN,
    STOP,
    TURN_LEFT,
    TURN_RIGHT,
    PrimitiveAction,
)
from conav.util import Cell, HEADINGS, HEADING_VECS, chebyshev

_CODE_TO_KIND = {0: MOVE_FORWARD, 1: TURN_LEFT, 2: TURN_RIGHT}


class Executor:
    """Drives the current StepPlan, emitting one primitive per tick."""

    def __init__(self, graph, profile):
        self.graph = graph
        self.profile = profile
        self.plan = None
        self.step_idx = 0
        self.feedback_entries: list[dict] = []
        self._queue: list[str] = []
        self._target: Cell | None = None
        self._candidates: list[Cell] = []
        self._phase = ""
        self._cool_pending = False
        self._need_motion = False
        self._last_pose: tuple[Cell, str] | None = None
        self._aborted = False

    # ------------------------------------------------------------------

    def load(self, plan) -> None:
        self.plan = plan
        self.step_idx = 0
        self.feedback_entries = []
        self._reset_step()
        self._aborted = False

    def _reset_step(self) -> None:
        self._queue = []
        self._target = None
        self._candidates = []
        self._phase = "start"
        self._need_motion = False

    @property
    def exhausted(self) -> bool:
        return (self.plan is None or self._aborted
                or self.step_idx >= len(self.plan.steps))

    @property
    def idling(self) -> bool:
        """True while parked on a "done" step."""
        if self.plan is None or self.exhausted:
            return False
        return self.plan.steps[self.step_idx]["function"] == "done"

    def abort(self, reason: str) -> None:
        if self.plan is not None and not self.exhausted:
            step = self.plan.steps[self.step_idx]
            self._finish_step(step, "interrupted", reason)
        self._aborted = True

    def invalidate_motion(self) -> None:
        """Speed or belief changed; re-derive primitives for this step."""
        self._need_motion = True

    # ------------------------------------------------------------------

    def next_action(self, cell: Cell, heading: str,
                    tick: int) -> PrimitiveAction | None:
        """The primitive to issue this tick, or None when the plan is done."""
        if self._cool_pending:
            self._cool_pending = False
            self._last_pose = (cell, heading)
            return PrimitiveAction(STOP)
        while not self.exhausted:
            step = self.plan.steps[self.step_idx]
            action = self._drive_step(step, cell, heading)
            if action is not None:
                self._last_pose = (cell, heading)
                return action
            if self._aborted:
                break
        self._last_pose = (cell, heading)
        return None

    def _drive_step(self, step: dict, cell: Cell,
                    heading: str) -> PrimitiveAction | None:
        fn = step["function"]
        if fn == "done":
            return PrimitiveAction(STOP)
        if fn == "look_around":
            self._phase = "looking"
            return PrimitiveAction(LOOK_AROUND)
        if fn == "navigate_to":
            if self._arrived_nav(step, cell):
                self._finish_step(step, "succeeded", "")
                return None
            return self._motion_action(step, cell, heading)
        if fn in ("open_object", "close_object"):
            rec = self.graph.record(step["object_id"])
            if rec is None:
                self._finish_step(step, "blocked", "entity unknown")
                self._aborted = True
                return None
            rc = tuple(rec["cell"])
            if chebyshev(cell, rc) > 1:
                return self._motion_action(step, cell, heading,
                                           approach=rc)
            self._phase = "acting"
            kind = OPEN if fn == "open_object" else CLOSE
            return PrimitiveAction(kind, receptacle_id=step["object_id"])
        self._finish_step(step, "illegal", f"unknown function {fn}")
        self._aborted = True
        return None

    def _arrived_nav(self, step: dict, cell: Cell) -> bool:
        kind = step["target_kind"]
        if kind == "room":
            return self.graph.house.room_of(cell) == step["target"]
        if kind == "door":
            door = next(d for d in self.graph.house.doors
                        if d.id == step["target"])
            return cell == door.cell
        if kind == "receptacle":
            rec = self.graph.record(step["target"])
            return rec is not None and chebyshev(cell, tuple(rec["cell"])) <= 1
        return self._target is not None and cell == self._target

    def _motion_action(self, step: dict, cell: Cell, heading: str,
                       approach: Cell | None = None) -> PrimitiveAction | None:
        if self._need_motion or not self._queue or self._target is None:
            if not self._plan_motion(step, cell, heading, approach):
                self._finish_step(step, "blocked", "no route to target")
                self._aborted = True
                return None
        if not self._queue:
            # Already standing on the chosen goal cell.
            if approach is None:
                self._finish_step(step, "succeeded", "")
            return None
        kind = self._queue.pop(0)
        return PrimitiveAction(kind)

    def _goal_candidates(self, step: dict, cell: Cell,
                         approach: Cell | None) -> list[list[Cell]]:
        """Acceptable landing cells, best preference group first.

        Any cell within a group is equally good; the route planner gets
        the whole group at once and stops on whichever it reaches first.
        """
        g = self.graph.house.grid
        mask = self.graph.passable_mask()

        def believed(cells) -> list[Cell]:
            return [c for c in cells
                    if g.in_bounds(c) and mask[g.index(c)] == 1]

        if approach is not None:
            ring = [(approach[0] + dx, approach[1] + dy)
                    for dx in (-1, 0, 1) for dy in (-1, 0, 1)
                    if (dx, dy) != (0, 0)]
            return [believed(ring)]
        kind = step["target_kind"]
        if kind == "room":
            room = self.graph.house.room_by_id(step["target"])
            return [believed(room.cells())]
        if kind == "door":
            door = next(d for d in self.graph.house.doors
                        if d.id == step["target"])
            return [believed([door.cell])]
        if kind == "receptacle":
            rec = self.graph.record(step["target"])
            if rec is None:
                return []
            rc = tuple(rec["cell"])
            ring = [(rc[0] + dx, rc[1] + dy)
                    for dx in (-1, 0, 1) for dy in (-1, 0, 1)
                    if (dx, dy) != (0, 0)]
            return [believed(ring)]
        target = tuple(step["target"])
        near = [(target[0] + d[0], target[1] + d[1])
                for d in ((0, -1), (-1, 0), (1, 0), (0, 1))]
        return [believed([target]), believed(near)]

    def _plan_motion(self, step: dict, cell: Cell, heading: str,
                     approach: Cell | None) -> bool:
        g = self.graph.house.grid
        mask = bytes(self.graph.passable_mask())
        speed = self.profile.speed_cells_per_tick
        hdg = HEADINGS.index(heading)
        # Landings are restricted to access-preserving cells: a speed-2
        # route may otherwise park the agent where some room or furniture
        # approach is no longer reachable.
        safe = safe_landing_mask(mask, g.width, g.height, cell[0], cell[1],
                                 hdg, speed, landing_bits(self.graph))
        for group in self._goal_candidates(step, cell, approach):
            group = [c for c in group if safe[g.index(c)]]
            if not group:
                continue
            goals = bytearray(g.width * g.height)
            for cand in group:
                goals[g.index(cand)] = 1
            codes = motion_plan(mask, g.width, g.height, cell[0], cell[1],
                                hdg, speed, bytes(goals))
            if codes is None:
                continue
            self._target = self._replay(mask, cell, hdg, speed, codes)
            self._queue = [_CODE_TO_KIND[c] for c in codes]
            self._need_motion = False
            return True
        return False

    def _replay(self, mask: bytes, cell: Cell, hdg: int, speed: int,
                codes: list[int]) -> Cell:
        """Landing cell of a code sequence on the believed grid."""
        g = self.graph.house.grid
        x, y = cell
        for code in codes:
            if code == 1:
                hdg = (hdg + 3) % 4
            elif code == 2:
                hdg = (hdg + 1) % 4
            else:
                dx, dy = HEADING_VECS[HEADINGS[hdg]]
                for _ in range(speed):
                    nxt = (x + dx, y + dy)
                    if g.in_bounds(nxt) and mask[g.index(nxt)]:
                        x, y = nxt
                    else:
                        break
        return (x, y)

    # ------------------------------------------------------------------

    def note_outcome(self, action: PrimitiveAction, outcome) -> None:
        """Digest the engine's outcome for the primitive just issued."""
        if self.plan is None or self.exhausted or self._last_pose is None:
            return
        step = self.plan.steps[self.step_idx]
        fn = step["function"]
        cell, heading = self._last_pose

        if action.kind == MOVE_FORWARD:
            if outcome.ok:
                if self.profile.condition == DEGRADED_BATTERY:
                    self._cool_pending = True
            elif outcome.detail == "battery_cooldown":
                self._queue.insert(0, MOVE_FORWARD)
                self._cool_pending = True
            else:
                dx, dy = HEADING_VECS[heading]
                ahead = (cell[0] + dx, cell[1] + dy)
                if self.graph.house.grid.in_bounds(ahead):
                    self.graph.note_blocked(ahead)
                self._queue = []
                self._need_motion = True
            return

        if action.kind == LOOK_AROUND and fn == "look_around":
            self._finish_step(step, "succeeded" if outcome.ok else "blocked",
                              outcome.detail)
            return

        if action.kind in (OPEN, CLOSE) and self._phase == "acting":
            if outcome.ok:
                self._finish_step(step, "succeeded", "")
            elif outcome.detail in ("already_open", "already_closed"):
                self._finish_step(step, "succeeded", outcome.detail)
            elif outcome.result == "illegal":
                self._finish_step(step, "illegal", outcome.detail)
                self._aborted = True
            else:
                self._finish_step(step, "blocked", outcome.detail)
                self._aborted = True

    def _finish_step(self, step: dict, outcome: str, note: str) -> None:
        self.feedback_entries.append({
            "step_index": self.step_idx,
            "function": step["function"],
            "outcome": outcome,
            "note": note,
        })
        self.step_idx += 1
        self._reset_step()
