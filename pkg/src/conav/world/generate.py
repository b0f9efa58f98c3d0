"""Procedural house and episode generation.

Layout is rectangle splitting on a walled canvas, doors are carved on
shared walls to form a connected room graph, and receptacles/objects are
placed under visibility constraints so that a systematic room sweep is
guaranteed to reveal everything that was placed. Each concern draws from
its own named PRNG stream, so tweaking one stage cannot perturb another.
"""

from __future__ import annotations

import random

from conav.config import FINE_DISC_RADIUS
from conav.util import Cell, chebyshev, rng_stream
from conav.world.types import (
    DOOR,
    FLOOR,
    FOOTPRINT,
    WALL,
    Door,
    Episode,
    GenerationFailed,
    GridMap,
    House,
    HouseSpec,
    NoCandidate,
    ObjectInstance,
    Receptacle,
    Room,
    load_catalog,
    sweep_lattice,
)

MAX_ATTEMPTS = 64
EXTRA_DOOR_CHANCE = 0.15

DEFAULT_ROOM_KIND_MIX = {
    "bedroom": 0.30,
    "living_room": 0.25,
    "bathroom": 0.20,
    "hallway": 0.15,
    "kitchen": 0.10,
}

_catalog_cache: dict | None = None


def _catalog() -> dict:
    global _catalog_cache
    if _catalog_cache is None:
        _catalog_cache = load_catalog()
    return _catalog_cache


def generate_house(spec: HouseSpec) -> House:
    if not 3 <= spec.room_count <= 10:
        raise ValueError(f"room_count must be in [3, 10], got {spec.room_count}")
    mix = spec.room_kind_mix or DEFAULT_ROOM_KIND_MIX
    for attempt in range(MAX_ATTEMPTS):
        house = _try_generate(spec, attempt, mix)
        if house is not None:
            house.validate()
            return house
    raise GenerationFailed(
        f"no valid house for seed={spec.seed} after {MAX_ATTEMPTS} attempts")


def _canvas_size(room_count: int) -> tuple[int, int]:
    """Canvas whose interior has even spans on both axes.

    A nominal fast agent covers two cells per move and stops short only
    against an obstruction, so cell parity along each axis is sticky: in
    an empty rectangle, clips against one wall shift a class toward the
    wall and clips against the opposite wall shift it back only when the
    interior span is even. Even interior spans keep the two parity
    classes mutually reachable, which the placement stages then preserve.
    """
    interior_w = 12 + 2 * room_count
    interior_h = 10 + room_count + (room_count & 1)
    return interior_w + 2, interior_h + 2


def _split_regions(rng: random.Random, interior, count):
    """Recursive rectangle splitting; regions are inclusive (x0, y0, x1, y1)."""
    regions = [interior]
    while len(regions) < count:
        splittable = [
            i for i, (x0, y0, x1, y1) in enumerate(regions)
            if x1 - x0 + 1 >= 7 or y1 - y0 + 1 >= 7
        ]
        if not splittable:
            return None
        pick = max(
            splittable,
            key=lambda i: (
                (regions[i][2] - regions[i][0] + 1)
                * (regions[i][3] - regions[i][1] + 1),
                -i,
            ),
        )
        x0, y0, x1, y1 = regions.pop(pick)
        w = x1 - x0 + 1
        h = y1 - y0 + 1
        if w >= 7 and h >= 7:
            vertical = rng.random() < w / (w + h)
        else:
            vertical = w >= 7
        if vertical:
            c = _pick_cut(rng, x0, x1)
            regions.append((x0, y0, c - 1, y1))
            regions.append((c + 1, y0, x1, y1))
        else:
            c = _pick_cut(rng, y0, y1)
            regions.append((x0, y0, x1, c - 1))
            regions.append((x0, c + 1, x1, y1))
    return regions


def _pick_cut(rng: random.Random, lo: int, hi: int) -> int:
    """Wall position for a split, biased toward even child spans.

    Rooms with even interior spans on both axes let a speed-2 agent swap
    cell-parity classes against either wall, so the more of them the
    better. An even span can only split into one even and one odd child;
    in that case the odd child is kept larger, since larger regions are
    split again and get another chance to land on even spans.
    """
    both_even = [
        c for c in range(lo + 4, hi - 3)
        if (c - lo) % 2 == 0 and (hi - c) % 2 == 0
    ]
    if both_even:
        return rng.choice(both_even)
    small_even = [
        c for c in range(lo + 3, hi - 2)
        if min(c - lo, hi - c) % 2 == 0
    ]
    if small_even:
        return rng.choice(small_even)
    return rng.randrange(lo + 3, hi - 2)


def _adjacent_pairs(regions):
    """Map (i, j) -> candidate door cells on the wall shared by both."""
    pairs: dict[tuple[int, int], list[Cell]] = {}
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            a, b = regions[i], regions[j]
            cells: list[Cell] = []
            if a[2] + 2 == b[0]:
                lo, hi = max(a[1], b[1]), min(a[3], b[3])
                cells = [(a[2] + 1, y) for y in range(lo, hi + 1)]
            elif b[2] + 2 == a[0]:
                lo, hi = max(a[1], b[1]), min(a[3], b[3])
                cells = [(b[2] + 1, y) for y in range(lo, hi + 1)]
            elif a[3] + 2 == b[1]:
                lo, hi = max(a[0], b[0]), min(a[2], b[2])
                cells = [(x, a[3] + 1) for x in range(lo, hi + 1)]
            elif b[3] + 2 == a[1]:
                lo, hi = max(a[0], b[0]), min(a[2], b[2])
                cells = [(x, b[3] + 1) for x in range(lo, hi + 1)]
            if cells:
                pairs[(i, j)] = cells
    return pairs


def _assign_kinds(rng: random.Random, count: int, mix: dict[str, float]):
    """Weighted kinds with a kitchen always present."""
    kinds_sorted = sorted(mix)
    weights = [mix[k] for k in kinds_sorted]
    kinds = [rng.choices(kinds_sorted, weights=weights)[0] for _ in range(count)]
    if "kitchen" not in kinds:
        kinds[rng.randrange(count)] = "kitchen"
    return kinds


def _neighbors4(cell: Cell):
    x, y = cell
    return ((x, y - 1), (x - 1, y), (x + 1, y), (x, y + 1))


class _Canvas:
    """Mutable grid under construction plus placement bookkeeping."""

    def __init__(self, w: int, h: int):
        self.w = w
        self.h = h
        self.cells = bytearray([WALL]) * (w * h)

    def idx(self, cell: Cell) -> int:
        return cell[1] * self.w + cell[0]

    def kind(self, cell: Cell) -> int:
        return self.cells[self.idx(cell)]

    def set_kind(self, cell: Cell, kind: int) -> None:
        self.cells[self.idx(cell)] = kind

    def passable(self, cell: Cell) -> bool:
        x, y = cell
        if not (0 <= x < self.w and 0 <= y < self.h):
            return False
        return self.cells[y * self.w + x] in (FLOOR, DOOR)

    def floor_connected(self) -> bool:
        floors = [i for i, k in enumerate(self.cells) if k == FLOOR]
        if not floors:
            return False
        seen = bytearray(self.w * self.h)
        stack = [floors[0]]
        seen[floors[0]] = 1
        while stack:
            cur = stack.pop()
            y, x = divmod(cur, self.w)
            for nx, ny in _neighbors4((x, y)):
                if 0 <= nx < self.w and 0 <= ny < self.h:
                    i = ny * self.w + nx
                    if not seen[i] and self.cells[i] in (FLOOR, DOOR):
                        seen[i] = 1
                        stack.append(i)
        return all(seen[i] for i in floors)


def _fast_roundtrip(canvas: _Canvas) -> bool:
    """Every passable cell is a reachable stop for a speed-2 agent, always.

    A fast agent advances two cells per move and stops short only against
    an obstruction, so the cells it can halt on form a directed landing
    graph; clips against walls and furniture shift parity classes one way
    only, and a weak spot leaves an absorbing pocket that an agent can
    enter but never leave. Requiring the landing graph to be strongly
    connected rules such pockets out: wherever an agent ends up, by
    whatever bounce, every room, door, and furniture approach stays
    reachable. Slower agents are unaffected; at one cell per move the
    landing graph is plain floor adjacency, which is checked separately.
    """
    w, h = canvas.w, canvas.h
    cells = [i for i, k in enumerate(canvas.cells) if k in (FLOOR, DOOR)]
    if not cells:
        return False
    order = {c: n for n, c in enumerate(cells)}
    succ: list[list[int]] = [[] for _ in cells]
    pred: list[list[int]] = [[] for _ in cells]
    for n, i in enumerate(cells):
        x, y = i % w, i // w
        for dx, dy in ((0, -1), (1, 0), (0, 1), (-1, 0)):
            lx, ly, moved = x, y, 0
            for _ in range(2):
                nx, ny = lx + dx, ly + dy
                if not canvas.passable((nx, ny)):
                    break
                lx, ly, moved = nx, ny, moved + 1
            if moved:
                m = order[ly * w + lx]
                succ[n].append(m)
                pred[m].append(n)

    def covers_all(adj: list[list[int]]) -> bool:
        seen = bytearray(len(cells))
        seen[0] = 1
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = 1
                    stack.append(v)
        return all(seen)

    return covers_all(succ) and covers_all(pred)


def _pinch_free(canvas: _Canvas, cell: Cell) -> bool:
    """No diagonal approach to the cell is sight-pinched by blocker pairs."""
    x, y = cell
    for dx in (-1, 1):
        for dy in (-1, 1):
            if not canvas.passable((x + dx, y + dy)):
                continue
            a = canvas.kind((x + dx, y)) in (WALL, FOOTPRINT)
            b = canvas.kind((x, y + dy)) in (WALL, FOOTPRINT)
            if a and b:
                return False
    return True


def _try_generate(spec: HouseSpec, attempt: int, mix: dict[str, float]):
    catalog = _catalog()
    w, h = _canvas_size(spec.room_count)
    layout_rng = rng_stream(spec.seed, f"layout:{attempt}")
    regions = _split_regions(layout_rng, (1, 1, w - 2, h - 2), spec.room_count)
    if regions is None:
        return None

    kinds_rng = rng_stream(spec.seed, f"kinds:{attempt}")
    kinds = _assign_kinds(kinds_rng, spec.room_count, mix)

    canvas = _Canvas(w, h)
    rooms = []
    for i, bounds in enumerate(regions):
        x0, y0, x1, y1 = bounds
        for y in range(y0, y1 + 1):
            for x in range(x0, x1 + 1):
                canvas.set_kind((x, y), FLOOR)
        rooms.append(Room(id=f"room_{i}", kind=kinds[i], bounds=bounds))

    doors_rng = rng_stream(spec.seed, f"doors:{attempt}")
    pairs = _adjacent_pairs(regions)
    order = sorted(pairs)
    doors_rng.shuffle(order)
    parent = list(range(len(regions)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    chosen_pairs = []
    leftovers = []
    for pair in order:
        ra, rb = find(pair[0]), find(pair[1])
        if ra != rb:
            parent[ra] = rb
            chosen_pairs.append(pair)
        else:
            leftovers.append(pair)
    if len(chosen_pairs) != len(regions) - 1:
        return None
    for pair in leftovers:
        if doors_rng.random() < EXTRA_DOOR_CHANCE:
            chosen_pairs.append(pair)

    doors = []
    for k, (i, j) in enumerate(chosen_pairs):
        cell = doors_rng.choice(pairs[(i, j)])
        canvas.set_kind(cell, DOOR)
        doors.append(Door(id=f"door_{k}", cell=cell,
                          room_a=f"room_{i}", room_b=f"room_{j}"))

    # Cells that must stay clear of footprints: sweep vantages with their
    # 4-neighborhoods (arrival zones) and the cells flanking each door.
    reserved: set[Cell] = set()
    for room in rooms:
        for v in sweep_lattice(room.bounds):
            reserved.add(v)
            reserved.update(_neighbors4(v))
    for door in doors:
        reserved.update(_neighbors4(door.cell))

    rec_rng = rng_stream(spec.seed, f"receptacles:{attempt}")
    rec_catalog = catalog["receptacles"]
    receptacles: list[Receptacle] = []
    footprints: list[Cell] = []

    def try_place_receptacle(room: Room, category: str) -> bool:
        x0, y0, x1, y1 = room.bounds
        candidates = []
        for y in range(y0, y1 + 1):
            for x in range(x0, x1 + 1):
                cell = (x, y)
                if canvas.kind(cell) != FLOOR or cell in reserved:
                    continue
                if any(chebyshev(cell, f) <= 1 for f in footprints):
                    continue
                candidates.append(cell)
        if not candidates:
            return False
        cell = rec_rng.choice(candidates)
        rec = Receptacle(
            id=f"rec_{len(receptacles)}",
            category=category,
            cell=cell,
            openable=rec_catalog[category]["openable"],
        )
        canvas.set_kind(cell, FOOTPRINT)
        footprints.append(cell)
        receptacles.append(rec)
        room.receptacle_ids.append(rec.id)
        return True

    for room in rooms:
        legal = sorted(
            c for c, info in rec_catalog.items() if room.kind in info["rooms"])
        if not legal:
            continue
        wanted = []
        if room.kind == "kitchen":
            wanted.append("fridge")
            rest = [c for c in legal if c != "fridge"]
            wanted.extend(rec_rng.sample(rest, min(len(rest), rec_rng.randint(1, 2))))
        else:
            wanted.extend(rec_rng.sample(legal, min(len(legal), rec_rng.randint(1, 2))))
        for category in wanted:
            try_place_receptacle(room, category)

    if not canvas.floor_connected():
        return None
    if not _fast_roundtrip(canvas):
        return None
    if not any(r.openable for r in receptacles):
        return None

    room_of_rec = {}
    for room in rooms:
        for rid in room.receptacle_ids:
            room_of_rec[rid] = room

    obj_rng = rng_stream(spec.seed, f"objects:{attempt}")
    obj_catalog = catalog["objects"]
    objects: list[ObjectInstance] = []
    occupied: set[Cell] = set()

    def place_object(category: str, cell: Cell, container_id=None) -> None:
        objects.append(ObjectInstance(
            id=f"obj_{len(objects)}",
            category=category,
            cell=cell,
            size_class=obj_catalog[category]["size_class"],
            container_id=container_id,
        ))
        occupied.add(cell)

    # Free-standing normal objects anywhere on free floor; room sweeps
    # find them regardless of shadows, since sweep bookkeeping works on
    # actually-seen cells and walks up to anything still hidden.
    for room in rooms:
        cats = sorted(
            c for c, info in obj_catalog.items()
            if info["size_class"] == "normal" and room.kind in info["rooms"])
        if not cats:
            continue
        for category in obj_rng.sample(cats, min(len(cats), obj_rng.randint(1, 2))):
            x0, y0, x1, y1 = room.bounds
            candidates = [
                (x, y)
                for y in range(y0, y1 + 1)
                for x in range(x0, x1 + 1)
                if canvas.kind((x, y)) == FLOOR and (x, y) not in occupied
            ]
            if candidates:
                place_object(category, obj_rng.choice(candidates))

    # Objects hidden inside openable receptacles.
    def compatible_contents(rec: Receptacle) -> list[str]:
        kind = room_of_rec[rec.id].kind
        return sorted(
            c for c, info in obj_catalog.items()
            if info["size_class"] == "normal"
            and rec.category in info["containers"]
            and kind in info["rooms"])

    contained_count = 0
    for rec in receptacles:
        if not rec.openable:
            continue
        cats = compatible_contents(rec)
        if cats and obj_rng.random() < 0.6:
            place_object(obj_rng.choice(cats), rec.cell, container_id=rec.id)
            contained_count += 1
    if contained_count == 0:
        for rec in receptacles:
            if rec.openable:
                cats = compatible_contents(rec)
                if cats:
                    place_object(obj_rng.choice(cats), rec.cell,
                                 container_id=rec.id)
                    contained_count += 1
                    break
    if contained_count == 0:
        return None

    # Small objects sit near furniture, where a close-range sweep of
    # receptacle surroundings is guaranteed to pass by them.
    small_quota = obj_rng.randint(1, 3)
    rec_order = receptacles[:]
    obj_rng.shuffle(rec_order)
    small_count = 0
    for rec in rec_order:
        if small_count == small_quota:
            break
        room = room_of_rec[rec.id]
        cats = sorted(
            c for c, info in obj_catalog.items()
            if info["size_class"] == "small" and room.kind in info["rooms"])
        if not cats:
            continue
        disc = [
            cell for cell in room.cells()
            if canvas.kind(cell) == FLOOR
            and cell not in occupied
            and chebyshev(cell, rec.cell) <= FINE_DISC_RADIUS
            and _pinch_free(canvas, cell)
        ]
        if not disc:
            continue
        place_object(obj_rng.choice(cats), obj_rng.choice(disc))
        small_count += 1
    if small_count == 0:
        return None

    uncontained = {o.category for o in objects
                   if o.container_id is None and o.size_class == "normal"}
    contained = {o.category for o in objects if o.container_id is not None}
    if not uncontained or len(uncontained | contained) < 2:
        return None

    grid = GridMap(width=w, height=h, cells=bytes(canvas.cells))
    return House(
        seed=spec.seed,
        rooms=rooms,
        doors=doors,
        grid=grid,
        receptacles=receptacles,
        objects=objects,
        object_catalog_version=catalog["version"],
    )


def generate_episode(house: House, seed: int) -> Episode:
    """Pick one target per class and spawn cells; pure in (house, seed)."""
    targets_rng = rng_stream(seed, "targets")
    spawns_rng = rng_stream(seed, "spawns")

    contained_pool = sorted(
        (o for o in house.objects if o.container_id is not None),
        key=lambda o: o.id)
    small_pool = sorted(
        (o for o in house.objects
         if o.size_class == "small" and o.container_id is None),
        key=lambda o: o.id)
    if not contained_pool:
        raise NoCandidate("no object contained in a closed openable receptacle")
    if not small_pool:
        raise NoCandidate("no small object")

    targets_rng.shuffle(contained_pool)
    chosen = None
    for contained in contained_pool:
        normal_pool = sorted(
            (o for o in house.objects
             if o.container_id is None and o.size_class == "normal"
             and o.category != contained.category),
            key=lambda o: o.id)
        if normal_pool:
            chosen = (targets_rng.choice(normal_pool), contained)
            break
    if chosen is None:
        raise NoCandidate("no uncontained normal object of a distinct category")
    normal, contained = chosen
    small = targets_rng.choice(small_pool)

    floors = [c for c in house.floor_cells()]
    spawn_cells = spawns_rng.sample(floors, 4)
    return Episode(
        seed=seed,
        targets=[normal.id, contained.id, small.id],
        spawn_cells=spawn_cells,
    )
