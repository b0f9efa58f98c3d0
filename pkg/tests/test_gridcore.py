"""Kernel tests against independent oracles.

The line-of-sight oracle does exact rational segment/square intersection
per cell; the path oracle is a plain BFS. Both are deliberately written
with different algorithms than the kernels they check.
"""

from __future__ import annotations

import random
from collections import deque
from fractions import Fraction

import pytest

from conav.gridcore import _pykernels

try:
    from conav.gridcore import _kernels
except ImportError:
    _kernels = None

IMPLS = [_pykernels] if _kernels is None else [_pykernels, _kernels]


def _ids(mod):
    return mod.IMPL


def _segment_hits_cell(x0, y0, x1, y1, cx, cy):
    """Closed segment between cell centers vs closed unit square, exact."""
    px, py = 2 * x0 + 1, 2 * y0 + 1
    dx, dy = (2 * x1 + 1) - px, (2 * y1 + 1) - py
    lo, hi = Fraction(0), Fraction(1)
    for p, d, mn, mx in ((px, dx, 2 * cx, 2 * cx + 2),
                         (py, dy, 2 * cy, 2 * cy + 2)):
        if d == 0:
            if p < mn or p > mx:
                return False
        else:
            t0 = Fraction(mn - p, d)
            t1 = Fraction(mx - p, d)
            if t0 > t1:
                t0, t1 = t1, t0
            lo = max(lo, t0)
            hi = min(hi, t1)
            if lo > hi:
                return False
    return True


def oracle_los(blocked, w, h, x0, y0, x1, y1):
    for cy in range(min(y0, y1), max(y0, y1) + 1):
        for cx in range(min(x0, x1), max(x0, x1) + 1):
            if (cx, cy) in ((x0, y0), (x1, y1)):
                continue
            if blocked[cy * w + cx] and _segment_hits_cell(x0, y0, x1, y1, cx, cy):
                return False
    return True


def oracle_bfs(passable, w, h, sx, sy):
    dist = {(sx, sy): 0}
    q = deque([(sx, sy)])
    while q:
        x, y = q.popleft()
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if (0 <= nx < w and 0 <= ny < h and passable[ny * w + nx]
                    and (nx, ny) not in dist):
                dist[(nx, ny)] = dist[(x, y)] + 1
                q.append((nx, ny))
    return dist


def _random_grid(rng, w, h, density):
    return bytes(1 if rng.random() < density else 0 for _ in range(w * h))


@pytest.mark.parametrize("mod", IMPLS, ids=_ids)
def test_los_matches_exact_oracle(mod):
    rng = random.Random(4001)
    checked = 0
    for _ in range(60):
        w = rng.randint(3, 14)
        h = rng.randint(3, 14)
        blocked = _random_grid(rng, w, h, rng.choice([0.1, 0.25, 0.5]))
        for _ in range(25):
            x0, y0 = rng.randrange(w), rng.randrange(h)
            x1, y1 = rng.randrange(w), rng.randrange(h)
            got = mod.los_clear(blocked, w, h, x0, y0, x1, y1)
            want = oracle_los(blocked, w, h, x0, y0, x1, y1)
            assert got == want, (w, h, blocked.hex(), (x0, y0), (x1, y1))
            checked += 1
    assert checked == 1500


@pytest.mark.parametrize("mod", IMPLS, ids=_ids)
def test_los_symmetry(mod):
    rng = random.Random(4002)
    for _ in range(300):
        w = rng.randint(3, 12)
        h = rng.randint(3, 12)
        blocked = _random_grid(rng, w, h, 0.3)
        x0, y0 = rng.randrange(w), rng.randrange(h)
        x1, y1 = rng.randrange(w), rng.randrange(h)
        assert (mod.los_clear(blocked, w, h, x0, y0, x1, y1)
                == mod.los_clear(blocked, w, h, x1, y1, x0, y0))


@pytest.mark.parametrize("mod", IMPLS, ids=_ids)
def test_los_corner_crossing_blocks_from_both_sides(mod):
    # Diagonal through the lattice corner between four cells: either
    # off-diagonal neighbor occludes it.
    w = h = 2
    for bad in ((1, 0), (0, 1)):
        blocked = bytearray(4)
        blocked[bad[1] * w + bad[0]] = 1
        assert not mod.los_clear(bytes(blocked), w, h, 0, 0, 1, 1)


@pytest.mark.parametrize("mod", IMPLS, ids=_ids)
def test_los_endpoints_never_block(mod):
    w = h = 4
    blocked = bytearray(16)
    blocked[0] = 1
    blocked[3 * 4 + 3] = 1
    assert mod.los_clear(bytes(blocked), w, h, 0, 0, 3, 3)
    assert mod.los_clear(bytes(blocked), w, h, 0, 0, 0, 0)


@pytest.mark.parametrize("mod", IMPLS, ids=_ids)
def test_los_same_row_through_gap(mod):
    # Wall with one missing cell in between: straight shot along the row
    # is blocked, but the adjacent clear row is not.
    w, h = 7, 3
    blocked = bytearray(w * h)
    blocked[1 * w + 3] = 1
    assert not mod.los_clear(bytes(blocked), w, h, 0, 1, 6, 1)
    assert mod.los_clear(bytes(blocked), w, h, 0, 0, 6, 0)


@pytest.mark.parametrize("mod", IMPLS, ids=_ids)
def test_astar_length_matches_bfs(mod):
    rng = random.Random(4003)
    reachable_cases = 0
    for _ in range(200):
        w = rng.randint(4, 16)
        h = rng.randint(4, 16)
        passable = bytearray(_random_grid(rng, w, h, 0.75))
        sx, sy = rng.randrange(w), rng.randrange(h)
        tx, ty = rng.randrange(w), rng.randrange(h)
        passable[sy * w + sx] = 1
        passable[ty * w + tx] = 1
        passable = bytes(passable)
        path = mod.astar_path(passable, w, h, sx, sy, tx, ty)
        dist = oracle_bfs(passable, w, h, sx, sy)
        if (tx, ty) not in dist:
            assert path is None
            continue
        reachable_cases += 1
        assert path is not None
        assert path[0] == sy * w + sx
        assert path[-1] == ty * w + tx
        assert len(path) == dist[(tx, ty)] + 1
        for a, b in zip(path, path[1:]):
            ay, ax = divmod(a, w)
            by, bx = divmod(b, w)
            assert abs(ax - bx) + abs(ay - by) == 1
            assert passable[b]
    assert reachable_cases >= 100


@pytest.mark.parametrize("mod", IMPLS, ids=_ids)
def test_astar_deterministic(mod):
    rng = random.Random(4004)
    for _ in range(40):
        w = rng.randint(5, 12)
        h = rng.randint(5, 12)
        passable = bytes(_random_grid(rng, w, h, 0.8))
        sx, sy = rng.randrange(w), rng.randrange(h)
        tx, ty = rng.randrange(w), rng.randrange(h)
        if not (passable[sy * w + sx] and passable[ty * w + tx]):
            continue
        first = mod.astar_path(passable, w, h, sx, sy, tx, ty)
        second = mod.astar_path(passable, w, h, sx, sy, tx, ty)
        assert first == second


@pytest.mark.parametrize("mod", IMPLS, ids=_ids)
def test_astar_trivial_and_unreachable(mod):
    w = h = 3
    passable = bytearray(9)
    passable[0] = 1
    passable[8] = 1
    assert mod.astar_path(bytes(passable), w, h, 0, 0, 0, 0) == [0]
    assert mod.astar_path(bytes(passable), w, h, 0, 0, 2, 2) is None


@pytest.mark.parametrize("mod", IMPLS, ids=_ids)
def test_bfs_dist_matches_oracle(mod):
    rng = random.Random(4005)
    for _ in range(100):
        w = rng.randint(3, 14)
        h = rng.randint(3, 14)
        passable = bytearray(_random_grid(rng, w, h, 0.7))
        sx, sy = rng.randrange(w), rng.randrange(h)
        passable[sy * w + sx] = 1
        passable = bytes(passable)
        got = mod.bfs_dist(passable, w, h, sx, sy)
        want = oracle_bfs(passable, w, h, sx, sy)
        for y in range(h):
            for x in range(w):
                expected = want.get((x, y), -1)
                assert got[y * w + x] == expected


def _apply_actions(passable, w, h, x, y, heading, speed, actions):
    """Test-local replay of move/turn semantics."""
    vecs = ((0, -1), (1, 0), (0, 1), (-1, 0))
    for action in actions:
        if action == 0:
            for _ in range(speed):
                nx, ny = x + vecs[heading][0], y + vecs[heading][1]
                if 0 <= nx < w and 0 <= ny < h and passable[ny * w + nx]:
                    x, y = nx, ny
                else:
                    break
        elif action == 1:
            heading = (heading + 3) % 4
        else:
            heading = (heading + 1) % 4
    return x, y, heading


def _oracle_motion_steps(passable, w, h, sx, sy, heading, speed, goals):
    """Independent minimum action count over (x, y, heading) states."""
    if goals[sy * w + sx]:
        return 0
    vecs = ((0, -1), (1, 0), (0, 1), (-1, 0))
    seen = {(sx, sy, heading)}
    q = deque([(sx, sy, heading, 0)])
    while q:
        x, y, hd, n = q.popleft()
        succs = []
        nx, ny = x, y
        for _ in range(speed):
            mx, my = nx + vecs[hd][0], ny + vecs[hd][1]
            if 0 <= mx < w and 0 <= my < h and passable[my * w + mx]:
                nx, ny = mx, my
            else:
                break
        if (nx, ny) != (x, y):
            succs.append((nx, ny, hd))
        succs.append((x, y, (hd + 3) % 4))
        succs.append((x, y, (hd + 1) % 4))
        for s in succs:
            if s not in seen:
                if goals[s[1] * w + s[0]]:
                    return n + 1
                seen.add(s)
                q.append((*s, n + 1))
    return None


@pytest.mark.parametrize("mod", IMPLS, ids=_ids)
@pytest.mark.parametrize("speed", [1, 2])
def test_motion_plan_reaches_goal_in_minimum_actions(mod, speed):
    rng = random.Random(4006 + speed)
    solved = 0
    for _ in range(120):
        w = rng.randint(4, 12)
        h = rng.randint(4, 12)
        passable = bytearray(_random_grid(rng, w, h, 0.75))
        sx, sy = rng.randrange(w), rng.randrange(h)
        passable[sy * w + sx] = 1
        goals = bytearray(w * h)
        for _ in range(rng.randint(1, 3)):
            gx, gy = rng.randrange(w), rng.randrange(h)
            goals[gy * w + gx] = 1
        heading = rng.randrange(4)
        passable = bytes(passable)
        goals = bytes(goals)
        plan = mod.motion_plan(passable, w, h, sx, sy, heading, speed, goals)
        want = _oracle_motion_steps(passable, w, h, sx, sy, heading, speed, goals)
        if want is None:
            assert plan is None
            continue
        assert plan is not None
        assert len(plan) == want
        x, y, _ = _apply_actions(passable, w, h, sx, sy, heading, speed, plan)
        assert goals[y * w + x]
        solved += 1
    assert solved >= 60


@pytest.mark.parametrize("mod", IMPLS, ids=_ids)
def test_motion_plan_uses_wall_stop(mod):
    # Speed 2 into a dead end one cell ahead: the move stops flush against
    # the wall, so the odd-offset goal is reachable in a single action even
    # though an unobstructed move would cover two cells.
    w, h = 3, 1
    passable = bytes([1, 1, 0])
    goals = bytes([0, 1, 0])
    plan = mod.motion_plan(passable, w, h, 0, 0, 1, 2, goals)
    assert plan == [0]
    x, y, _ = _apply_actions(passable, w, h, 0, 0, 1, 2, plan)
    assert (x, y) == (1, 0)


@pytest.mark.parametrize("mod", IMPLS, ids=_ids)
def test_motion_plan_empty_when_already_there(mod):
    w = h = 3
    passable = bytes([1] * 9)
    goals = bytearray(9)
    goals[4] = 1
    assert mod.motion_plan(bytes(passable), w, h, 1, 1, 0, 1, bytes(goals)) == []


@pytest.mark.skipif(_kernels is None, reason="compiled kernels unavailable")
def test_compiled_matches_python_exactly():
    rng = random.Random(4007)
    for _ in range(150):
        w = rng.randint(3, 14)
        h = rng.randint(3, 14)
        passable = bytearray(_random_grid(rng, w, h, 0.7))
        sx, sy = rng.randrange(w), rng.randrange(h)
        tx, ty = rng.randrange(w), rng.randrange(h)
        passable[sy * w + sx] = 1
        passable[ty * w + tx] = 1
        passable = bytes(passable)
        blocked = _random_grid(rng, w, h, 0.3)
        goals = bytearray(w * h)
        goals[ty * w + tx] = 1
        goals = bytes(goals)
        heading = rng.randrange(4)
        speed = rng.choice([1, 2])
        assert (_kernels.los_clear(blocked, w, h, sx, sy, tx, ty)
                == _pykernels.los_clear(blocked, w, h, sx, sy, tx, ty))
        assert (_kernels.astar_path(passable, w, h, sx, sy, tx, ty)
                == _pykernels.astar_path(passable, w, h, sx, sy, tx, ty))
        assert (_kernels.bfs_dist(passable, w, h, sx, sy)
                == _pykernels.bfs_dist(passable, w, h, sx, sy))
        assert (_kernels.motion_plan(passable, w, h, sx, sy, heading, speed, goals)
                == _pykernels.motion_plan(passable, w, h, sx, sy, heading, speed, goals))
