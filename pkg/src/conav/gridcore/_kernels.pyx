# cython: language_level=3
"""Compiled grid kernels.

Twin of _pykernels.py: identical signatures, identical tie-breaking,
identical results. Only the execution speed differs.
"""

from libc.stdlib cimport free, malloc

IMPL = "compiled"

cdef int[4] _DX = [0, 1, 0, -1]
cdef int[4] _DY = [-1, 0, 1, 0]

# Neighbor visit order for search: up, left, right, down.
cdef int[4] _AX = [0, -1, 1, 0]
cdef int[4] _AY = [-1, 0, 0, 1]


def los_clear(const unsigned char[:] blocked, int w, int h,
              int x0, int y0, int x1, int y1):
    """Line of sight between cell centers using a supercover walk.

    Every cell whose closed unit square touches the closed segment is
    considered; endpoints never block. Exact corner crossings include both
    side cells (conservative occlusion).
    """
    cdef int end, dx, dy, sx, sy, cx, cy, bx, by, i
    cdef long long px, py, adx, ady, a, b
    if x0 == x1 and y0 == y1:
        return True
    end = y1 * w + x1
    dx = x1 - x0
    dy = y1 - y0
    sx = 1 if dx > 0 else (-1 if dx < 0 else 0)
    sy = 1 if dy > 0 else (-1 if dy < 0 else 0)
    px = 2 * x0 + 1
    py = 2 * y0 + 1
    adx = 2 * (dx if dx > 0 else -dx)
    ady = 2 * (dy if dy > 0 else -dy)
    cx = x0
    cy = y0
    while cx != x1 or cy != y1:
        if dx == 0:
            cy += sy
        elif dy == 0:
            cx += sx
        else:
            bx = 2 * (cx + (1 if sx > 0 else 0))
            by = 2 * (cy + (1 if sy > 0 else 0))
            a = (bx - px if bx >= px else px - bx) * ady
            b = (by - py if by >= py else py - by) * adx
            if a < b:
                cx += sx
            elif a > b:
                cy += sy
            else:
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


def bfs_dist(const unsigned char[:] passable, int w, int h, int sx, int sy):
    """Breadth-first distance map from (sx, sy); -1 marks unreachable cells."""
    cdef int n = w * h
    cdef int start = sy * w + sx
    cdef int head = 0, tail = 0
    cdef int cur, d, x, y, nx, ny, i, k
    cdef int *dist = <int *> malloc(n * sizeof(int))
    cdef int *q = <int *> malloc(n * sizeof(int))
    if dist == NULL or q == NULL:
        free(dist)
        free(q)
        raise MemoryError()
    try:
        for i in range(n):
            dist[i] = -1
        if passable[start]:
            dist[start] = 0
            q[tail] = start
            tail += 1
            while head < tail:
                cur = q[head]
                head += 1
                d = dist[cur] + 1
                y = cur // w
                x = cur - y * w
                for k in range(4):
                    nx = x + _DX[k]
                    ny = y + _DY[k]
                    if 0 <= nx < w and 0 <= ny < h:
                        i = ny * w + nx
                        if passable[i] and dist[i] < 0:
                            dist[i] = d
                            q[tail] = i
                            tail += 1
        return [dist[i] for i in range(n)]
    finally:
        free(dist)
        free(q)


cdef inline void _heap_push(long long *heap, int *size, long long key):
    cdef int i = size[0]
    cdef int parent
    heap[i] = key
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if heap[parent] <= heap[i]:
            break
        heap[parent], heap[i] = heap[i], heap[parent]
        i = parent


cdef inline long long _heap_pop(long long *heap, int *size):
    cdef long long top = heap[0]
    cdef int i = 0, child
    size[0] -= 1
    heap[0] = heap[size[0]]
    while True:
        child = 2 * i + 1
        if child >= size[0]:
            break
        if child + 1 < size[0] and heap[child + 1] < heap[child]:
            child += 1
        if heap[i] <= heap[child]:
            break
        heap[i], heap[child] = heap[child], heap[i]
        i = child
    return top


def astar_path(const unsigned char[:] passable, int w, int h,
               int sx, int sy, int tx, int ty):
    """Shortest 4-connected path as cell indices, or None if unreachable.

    Deterministic: neighbors expand in (row, col) order and the heap breaks
    ties by g-value then cell index. Keys pack (f, g, idx) into one int64,
    which needs w * h <= 1 << 20.
    """
    cdef int n = w * h
    cdef int start = sy * w + sx
    cdef int target = ty * w + tx
    cdef int cap, size, cur, x, y, nx, ny, i, j, k, gc, ng
    cdef long long key, stride_f, stride_g
    cdef long long *heap
    cdef long long *grown
    cdef int *g
    cdef int *came
    cdef unsigned char *done
    if not passable[start] or not passable[target]:
        return None
    if start == target:
        return [start]
    stride_g = n
    stride_f = <long long> n * (n + 1)
    cap = 4 * n
    heap = <long long *> malloc(cap * sizeof(long long))
    g = <int *> malloc(n * sizeof(int))
    came = <int *> malloc(n * sizeof(int))
    done = <unsigned char *> malloc(n)
    if heap == NULL or g == NULL or came == NULL or done == NULL:
        free(heap)
        free(g)
        free(came)
        free(done)
        raise MemoryError()
    try:
        for i in range(n):
            g[i] = -1
            came[i] = -1
            done[i] = 0
        g[start] = 0
        size = 0
        _heap_push(heap, &size,
                   stride_f * (abs(sx - tx) + abs(sy - ty)) + start)
        while size > 0:
            key = _heap_pop(heap, &size)
            cur = <int> (key % stride_g)
            gc = <int> ((key // stride_g) % (n + 1))
            if cur == target:
                path = [cur]
                while came[cur] >= 0:
                    cur = came[cur]
                    path.append(cur)
                path.reverse()
                return path
            if done[cur]:
                continue
            done[cur] = 1
            y = cur // w
            x = cur - y * w
            ng = gc + 1
            # Up, left, right, down: lexicographic (row, col).
            for k in range(4):
                nx = x + _AX[k]
                ny = y + _AY[k]
                if 0 <= nx < w and 0 <= ny < h:
                    i = ny * w + nx
                    if passable[i] and not done[i] and (g[i] < 0 or ng < g[i]):
                        g[i] = ng
                        came[i] = cur
                        if size == cap:
                            grown = <long long *> malloc(
                                2 * cap * sizeof(long long))
                            if grown == NULL:
                                raise MemoryError()
                            for j in range(size):
                                grown[j] = heap[j]
                            free(heap)
                            heap = grown
                            cap = 2 * cap
                        _heap_push(heap, &size,
                                   stride_f * (ng + abs(nx - tx) + abs(ny - ty))
                                   + stride_g * ng + i)
        return None
    finally:
        free(heap)
        free(g)
        free(came)
        free(done)


def motion_plan(const unsigned char[:] passable, int w, int h,
                int sx, int sy, int heading, int speed,
                const unsigned char[:] goals):
    """Minimum-tick primitive sequence from a pose to any goal cell.

    Plans over (cell, heading) states with the engine's exact move semantics:
    a move advances up to `speed` cells along the heading and stops before
    the first impassable cell (zero displacement is not a transition).
    Action codes: 0=move_forward, 1=turn_left, 2=turn_right. Returns [] when
    already on a goal cell, None when no goal is reachable.
    """
    cdef int n = w * h
    cdef int start_cell = sy * w + sx
    cdef int s0, state, nstate, cell, hd, x, y, nx, ny, mx, my, action, j, s
    cdef int head = 0, tail = 0
    cdef unsigned char *visited
    cdef int *par_state
    cdef unsigned char *par_action
    cdef int *q
    if goals[start_cell]:
        return []
    if not passable[start_cell]:
        # The agent is standing here, so the belief is wrong; plan out of it.
        patched = bytearray(passable)
        patched[start_cell] = 1
        passable = patched
    visited = <unsigned char *> malloc(n * 4)
    par_state = <int *> malloc(n * 4 * sizeof(int))
    par_action = <unsigned char *> malloc(n * 4)
    q = <int *> malloc(n * 4 * sizeof(int))
    if visited == NULL or par_state == NULL or par_action == NULL or q == NULL:
        free(visited)
        free(par_state)
        free(par_action)
        free(q)
        raise MemoryError()
    try:
        for j in range(n * 4):
            visited[j] = 0
        s0 = start_cell * 4 + heading
        visited[s0] = 1
        q[tail] = s0
        tail += 1
        while head < tail:
            state = q[head]
            head += 1
            cell = state // 4
            hd = state - cell * 4
            y = cell // w
            x = cell - y * w
            for action in range(3):
                if action == 0:
                    nx = x
                    ny = y
                    for j in range(speed):
                        mx = nx + _DX[hd]
                        my = ny + _DY[hd]
                        if 0 <= mx < w and 0 <= my < h and passable[my * w + mx]:
                            nx = mx
                            ny = my
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
                par_action[nstate] = <unsigned char> action
                if goals[nstate // 4]:
                    actions = [action]
                    s = state
                    while s != s0:
                        actions.append(par_action[s])
                        s = par_state[s]
                    actions.reverse()
                    return actions
                q[tail] = nstate
                tail += 1
        return None
    finally:
        free(visited)
        free(par_state)
        free(par_action)
        free(q)


cdef inline int _move_target(const unsigned char *passable, int w, int h,
                             int cell, int hd, int speed) nogil:
    """Landing cell of a move from `cell` facing `hd`, or -1 for no move."""
    cdef int y = cell // w
    cdef int x = cell - y * w
    cdef int nx = x, ny = y, mx, my, j
    for j in range(speed):
        mx = nx + _DX[hd]
        my = ny + _DY[hd]
        if 0 <= mx < w and 0 <= my < h and passable[my * w + mx]:
            nx = mx
            ny = my
        else:
            break
    if nx == x and ny == y:
        return -1
    return ny * w + nx


def safe_landing_mask(const unsigned char[:] passable, int w, int h,
                      int sx, int sy, int heading, int speed, cellbits):
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
    cdef int n = w * h
    cdef int nstates = n * 4
    cdef int start_cell = sy * w + sx
    cdef int s0, state, nstate, cell, hd, ei, t, cid, i, m, a
    cdef int next_index = 0, fs_top = 0, st_top = 0, ncomp = 0
    cdef long long baseline, b
    cdef unsigned char *pmut
    cdef long long *bits
    cdef int *index
    cdef int *low
    cdef int *comp
    cdef unsigned char *onstk
    cdef int *tstack
    cdef int *fs_state
    cdef int *fs_ei
    cdef int *succ_buf
    cdef long long *compbits

    pmut = <unsigned char *> malloc(n)
    bits = <long long *> malloc(n * sizeof(long long))
    index = <int *> malloc(nstates * sizeof(int))
    low = <int *> malloc(nstates * sizeof(int))
    comp = <int *> malloc(nstates * sizeof(int))
    onstk = <unsigned char *> malloc(nstates)
    tstack = <int *> malloc(nstates * sizeof(int))
    fs_state = <int *> malloc(nstates * sizeof(int))
    fs_ei = <int *> malloc(nstates * sizeof(int))
    compbits = <long long *> malloc(nstates * sizeof(long long))
    if (pmut == NULL or bits == NULL or index == NULL or low == NULL
            or comp == NULL or onstk == NULL or tstack == NULL
            or fs_state == NULL or fs_ei == NULL or compbits == NULL):
        free(pmut); free(bits); free(index); free(low); free(comp)
        free(onstk); free(tstack); free(fs_state); free(fs_ei)
        free(compbits)
        raise MemoryError()
    try:
        for i in range(n):
            pmut[i] = passable[i]
            bits[i] = cellbits[i]
        pmut[start_cell] = 1
        for i in range(nstates):
            index[i] = -1
            comp[i] = -1
            onstk[i] = 0
        s0 = start_cell * 4 + heading
        fs_state[0] = s0
        fs_ei[0] = 0
        fs_top = 1
        while fs_top > 0:
            state = fs_state[fs_top - 1]
            ei = fs_ei[fs_top - 1]
            if ei == 0:
                index[state] = next_index
                low[state] = next_index
                next_index += 1
                tstack[st_top] = state
                st_top += 1
                onstk[state] = 1
            # Successors in fixed order: move (if any), turn left, turn
            # right; ei indexes 0..2 over (move, left, right) with the
            # move slot skipped when blocked.
            cell = state // 4
            hd = state - cell * 4
            while ei < 3:
                if ei == 0:
                    t = _move_target(pmut, w, h, cell, hd, speed)
                    if t >= 0:
                        t = t * 4 + hd
                    else:
                        ei += 1
                        continue
                elif ei == 1:
                    t = cell * 4 + (hd + 3) % 4
                else:
                    t = cell * 4 + (hd + 1) % 4
                ei += 1
                if index[t] < 0:
                    fs_ei[fs_top - 1] = ei
                    fs_state[fs_top] = t
                    fs_ei[fs_top] = 0
                    fs_top += 1
                    break
                if onstk[t] and index[t] < low[state]:
                    low[state] = index[t]
            else:
                fs_top -= 1
                if fs_top > 0:
                    if low[state] < low[fs_state[fs_top - 1]]:
                        low[fs_state[fs_top - 1]] = low[state]
                if low[state] == index[state]:
                    cid = ncomp
                    ncomp += 1
                    b = 0
                    m = st_top
                    while True:
                        m -= 1
                        comp[tstack[m]] = cid
                        onstk[tstack[m]] = 0
                        b |= bits[tstack[m] // 4]
                        if tstack[m] == state:
                            break
                    for i in range(m, st_top):
                        cell = tstack[i] // 4
                        hd = tstack[i] - cell * 4
                        for a in range(3):
                            if a == 0:
                                t = _move_target(pmut, w, h, cell, hd, speed)
                                if t < 0:
                                    continue
                                t = t * 4 + hd
                            elif a == 1:
                                t = cell * 4 + (hd + 3) % 4
                            else:
                                t = cell * 4 + (hd + 1) % 4
                            if comp[t] >= 0 and comp[t] != cid:
                                b |= compbits[comp[t]]
                    compbits[cid] = b
                    st_top = m
        baseline = compbits[comp[s0]]
        out = bytearray(n)
        out[start_cell] = 1
        for state in range(nstates):
            cid = comp[state]
            if cid >= 0 and compbits[cid] == baseline:
                out[state // 4] = 1
        return bytes(out)
    finally:
        free(pmut); free(bits); free(index); free(low); free(comp)
        free(onstk); free(tstack); free(fs_state); free(fs_ei)
        free(compbits)


def motion_reachable(const unsigned char[:] passable, int w, int h,
                     int sx, int sy, int heading, int speed):
    """Byte mask of every cell the agent can come to rest on from this pose.

    Uses the same (cell, heading) transition model as motion_plan. At speed
    2 this is a strict subset of the 4-connected region: an unobstructed
    move always covers two cells, so parity locks some cells out unless a
    wall lets a move stop short.
    """
    cdef int n = w * h
    cdef int start_cell = sy * w + sx
    cdef int s0, state, nstate, cell, hd, x, y, nx, ny, mx, my, action, j
    cdef int head = 0, tail = 0
    cdef unsigned char *visited
    cdef int *q
    out = bytearray(n)
    out[start_cell] = 1
    if not passable[start_cell]:
        patched = bytearray(passable)
        patched[start_cell] = 1
        passable = patched
    visited = <unsigned char *> malloc(n * 4)
    q = <int *> malloc(n * 4 * sizeof(int))
    if visited == NULL or q == NULL:
        free(visited)
        free(q)
        raise MemoryError()
    try:
        for j in range(n * 4):
            visited[j] = 0
        s0 = start_cell * 4 + heading
        visited[s0] = 1
        q[tail] = s0
        tail += 1
        while head < tail:
            state = q[head]
            head += 1
            cell = state // 4
            hd = state - cell * 4
            y = cell // w
            x = cell - y * w
            for action in range(3):
                if action == 0:
                    nx = x
                    ny = y
                    for j in range(speed):
                        mx = nx + _DX[hd]
                        my = ny + _DY[hd]
                        if 0 <= mx < w and 0 <= my < h and passable[my * w + mx]:
                            nx = mx
                            ny = my
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
                q[tail] = nstate
                tail += 1
        return bytes(out)
    finally:
        free(visited)
        free(q)
