"""Pure-Python grid kernels.

Semantics must stay bit-identical to the compiled twin in _kernels.pyx:
same tie-breaking, same visit orders, same results. Everything is integer
arithmetic on flat row-major grids (index = y * width + x).

Cells are passable where passable[idx] != 0; sight is blocked where
blocked[idx] != 0. Headings: 0=N, 1=E, 2=S, 3=W.
"""

from __future__ import annotations

from collections import deque
from heapq import heappop, heappush

IMPL = "python"

_DX = (0, 1, 0, -1)
_DY = (-1, 0, 1, 0)


def los_clear(blocked, w: int, h: int, x0: int, y0: int, x1: int, y1: int) -> bool:
    """Line of sight between cell centers using a supercover walk.

    Every cell whose closed unit square touches the closed segment is
    considered; endpoints never block. Exact corner crossings include both
    side cells (conservative occlusion).
    """
    if x0 == x1 and y0 == y1:
        return True
    end = y1 * w + x1
    dx = x1 - x0
    dy = y1 - y0
    sx = 1 if dx > 0 else (-1 if dx < 0 else 0)
    sy = 1 if dy > 0 else (-1 if dy < 0 else 0)
    # Doubled coordinates keep boundary-crossing comparisons integral.
    px = 2 * x0 + 1
    py = 2 * y0 + 1
    adx = 2 * abs(dx)
    ady = 2 * abs(dy)
    cx, cy = x0, y0
    while cx != x1 or cy != y1:
        if dx == 0:
            cy += sy
        elif dy == 0:
            cx += sx
        else:
            bx = 2 * (cx + (1 if sx > 0 else 0))
            by = 2 * (cy + (1 if sy > 0 else 0))
            a = abs(bx - px) * ady
            b = abs(by - py) * adx
            if a < b:
                cx += sx
            elif a > b:
                cy += sy
            else:
                # Corner crossing: the segment touches both side cells.
                i = cy * w + cx + sx
                if i != end and blocked[i]:
                    return False
                i = (cy + sy) * w + cx
                if i != end and blocked[i]:
                    return False
                cx += sx
                cy += sy
        i = cy * w + cx
        if i != end and blocked[i]:
            return False
    return True


def bfs_dist(passable, w: int, h: int, sx: int, sy: int) -> list[int]:
    """Breadth-first distance map from (sx, sy); -1 marks unreachable cells."""
    dist = [-1] * (w * h)
    start = sy * w + sx
    if not passable[start]:
        return dist
    dist[start] = 0
    q = deque([start])
    while q:
        cur = q.popleft()
        d = dist[cur] + 1
        y, x = divmod(cur, w)
        for k in range(4):
            nx = x + _DX[k]
            ny = y + _DY[k]
            if 0 <= nx < w and 0 <= ny < h:
                i = ny * w + nx
                if passable[i] and dist[i] < 0:
                    dist[i] = d
                    q.append(i)
    return dist


def astar_path(passable, w: int, h: int, sx: int, sy: int, tx: int, ty: int):
    """Shortest 4-connected path as cell indices, or None if unreachable.

    Deterministic: neighbors expand in (row, col) order and the heap breaks
    ties by g-value then cell index.
    """
    start = sy * w + sx
    target = ty * w + tx
    if not passable[start] or not passable[target]:
        return None
    if start == target:
        return [start]
    g = {start: 0}
    came: dict[int, int] = {}
    hart = abs(sx - tx) + abs(sy - ty)
    heap = [(hart, 0, start)]
    done = bytearray(w * h)
    while heap:
        _, gc, cur = heappop(heap)
        if cur == target:
            path = [cur]
            while cur in came:
                cur = came[cur]
                path.append(cur)
            path.reverse()
            return path
        if done[cur]:
            continue
        done[cur] = 1
        y, x = divmod(cur, w)
        ng = gc + 1
        # Up, left, right, down: lexicographic (row, col).
        for nx, ny in ((x, y - 1), (x - 1, y), (x + 1, y), (x, y + 1)):
            if 0 <= nx < w and 0 <= ny < h:
                i = ny * w + nx
                if passable[i] and not done[i] and (i not in g or ng < g[i]):
                    g[i] = ng
                    came[i] = cur
                    heappush(heap, (ng + abs(nx - tx) + abs(ny - ty), ng, i))
    return None


def motion_plan(passable, w: int, h: int, sx: int, sy: int, heading: int,
                speed: int, goals):
    """Minimum-tick primitive sequence from a pose to any goal cell.

    Plans over (cell, heading) states with the engine's exact move semantics:
    a move advances up to `speed` cells along the heading and stops before
    the first impassable cell (zero displacement is not a transition).
    Action codes: 0=move_forward, 1=turn_left, 2=turn_right. Returns [] when
    already on a goal cell, None when no goal is reachable.
    """
    start_cell = sy * w + sx
    if goals[start_cell]:
        return []
    if not passable[start_cell]:
        # The agent is standing here, so the belief is wrong; plan out of it.
        passable = bytes(passable[:start_cell]) + b"\x01" + bytes(
            passable[start_cell + 1:])
    n = w * h
    visited = bytearray(n * 4)
    par_state = [-1] * (n * 4)
    par_action = bytearray(n * 4)
    s0 = start_cell * 4 + heading
    visited[s0] = 1
    q = deque([s0])
    while q:
        state = q.popleft()
        cell, hd = divmod(state, 4)
        y, x = divmod(cell, w)
        for action in (0, 1, 2):
            if action == 0:
                nx, ny = x, y
                for _ in range(speed):
                    mx = nx + _DX[hd]
                    my = ny + _DY[hd]
                    if 0 <= mx < w and 0 <= my < h and passable[my * w + mx]:
                        nx, ny = mx, my
                    else:
                        break
                if nx == x and ny == y:
                    continue
                nstate = (ny * w + nx) * 4 + hd
            elif action == 1:
                nstate = cell * 4 + (hd + 3) % 4
            else:
                nstate = cell * 4 + (hd + 1) % 4
            if visited[nstate]:
                continue
            visited[nstate] = 1
            par_state[nstate] = state
            par_action[nstate] = action
            if goals[nstate // 4]:
                actions = [action]
                s = state
                while s != s0:
                    actions.append(par_action[s])
                    s = par_state[s]
                actions.reverse()
                return actions
            q.append(nstate)
    return None


def _motion_transitions(passable, w: int, h: int, state: int,
                        speed: int) -> tuple[int, ...]:
    """Successor states of (cell, heading) under the engine's move model."""
    cell, hd = divmod(state, 4)
    y, x = divmod(cell, w)
    nx, ny = x, y
    for _ in range(speed):
        mx = nx + _DX[hd]
        my = ny + _DY[hd]
        if 0 <= mx < w and 0 <= my < h and passable[my * w + mx]:
            nx, ny = mx, my
        else:
            break
    turns = (cell * 4 + (hd + 3) % 4, cell * 4 + (hd + 1) % 4)
    if nx == x and ny == y:
        return turns
    return ((ny * w + nx) * 4 + hd,) + turns


def safe_landing_mask(passable, w: int, h: int, sx: int, sy: int,
                      heading: int, speed: int, cellbits) -> bytes:
    """Cells to stop on without forfeiting anything still attainable.

    A fast agent's move covers two cells unless a wall cuts it short, so
    some cell-parity boundaries cross one way only and raw reachability
    can shrink permanently as the agent drives. Framing poses as
    (cell, heading) states, the strongly connected components of the
    transition graph form a DAG along which the set of attainable
    requirement groups never grows. A landing is safe when its component
    still attains every group the agent's current component attains; any
    route to a safe landing then visits only safe states.

    cellbits[i] is a bitmask of the requirement groups cell i belongs to
    (a group is attained by stopping on any one of its cells). Returns a
    byte mask over cells.
    """
    n = w * h
    start_cell = sy * w + sx
    if not passable[start_cell]:
        passable = bytes(passable[:start_cell]) + b"\x01" + bytes(
            passable[start_cell + 1:])
    s0 = start_cell * 4 + heading

    # Tarjan over the states reachable from s0, iterative. States are
    # discovered lazily; components come out in reverse topological
    # order, so each component's downstream bits are complete when it
    # pops.
    index = {}
    low = {}
    on_stack = set()
    stack = []
    comp_of = {}
    comp_bits = []
    next_index = 0
    work = [(s0, 0)]
    while work:
        state, ei = work[-1]
        if ei == 0:
            index[state] = low[state] = next_index
            next_index += 1
            stack.append(state)
            on_stack.add(state)
        succ = _motion_transitions(passable, w, h, state, speed)
        if ei < len(succ):
            work[-1] = (state, ei + 1)
            t = succ[ei]
            if t not in index:
                work.append((t, 0))
            elif t in on_stack:
                if index[t] < low[state]:
                    low[state] = index[t]
        else:
            work.pop()
            if work:
                parent = work[-1][0]
                if low[state] < low[parent]:
                    low[parent] = low[state]
            if low[state] == index[state]:
                cid = len(comp_bits)
                bits = 0
                members = []
                while True:
                    s = stack.pop()
                    on_stack.discard(s)
                    comp_of[s] = cid
                    members.append(s)
                    bits |= cellbits[s // 4]
                    if s == state:
                        break
                for s in members:
                    for t in _motion_transitions(passable, w, h, s, speed):
                        if comp_of.get(t, cid) != cid:
                            bits |= comp_bits[comp_of[t]]
                comp_bits.append(bits)

    baseline = comp_bits[comp_of[s0]]
    out = bytearray(n)
    out[start_cell] = 1
    for state, cid in comp_of.items():
        if comp_bits[cid] == baseline:
            out[state // 4] = 1
    return bytes(out)


def motion_reachable(passable, w: int, h: int, sx: int, sy: int,
                     heading: int, speed: int) -> bytes:
    """Byte mask of every cell the agent can come to rest on from this pose.

    Uses the same (cell, heading) transition model as motion_plan. At speed
    2 this is a strict subset of the 4-connected region: an unobstructed
    move always covers two cells, so parity locks some cells out unless a
    wall lets a move stop short.
    """
    n = w * h
    out = bytearray(n)
    start_cell = sy * w + sx
    out[start_cell] = 1
    if not passable[start_cell]:
        passable = bytes(passable[:start_cell]) + b"\x01" + bytes(
            passable[start_cell + 1:])
    visited = bytearray(n * 4)
    s0 = start_cell * 4 + heading
    visited[s0] = 1
    q = deque([s0])
    while q:
        state = q.popleft()
        cell, hd = divmod(state, 4)
        y, x = divmod(cell, w)
        for action in (0, 1, 2):
            if action == 0:
                nx, ny = x, y
                for _ in range(speed):
                    mx = nx + _DX[hd]
                    my = ny + _DY[hd]
                    if 0 <= mx < w and 0 <= my < h and passable[my * w + mx]:
                        nx, ny = mx, my
                    else:
                        break
                if nx == x and ny == y:
                    continue
                nstate = (ny * w + nx) * 4 + hd
            elif action == 1:
                nstate = cell * 4 + (hd + 3) % 4
            else:
                nstate = cell * 4 + (hd + 1) % 4
            if visited[nstate]:
                continue
            visited[nstate] = 1
            out[nstate // 4] = 1
            q.append(nstate)
    return bytes(out)
