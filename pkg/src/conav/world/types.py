"""Static environment model: grid, rooms, doors, receptacles, objects.

Houses are immutable once generated (receptacle open_state is the one
runtime-mutable field, and the simulator owns it). Everything serializes
to canonical JSON so identical seeds produce identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from conav.config import DETECT_RANGE_NORMAL
from conav.util import Cell, canonical_json

FLOOR = 0
WALL = 1
DOOR = 2
FOOTPRINT = 3

_KIND_CHARS = ".#+R"

ROOM_KINDS = ("kitchen", "bedroom", "bathroom", "living_room", "hallway")


class OutOfBounds(Exception):
    """Coordinate outside the grid."""


class GenerationFailed(Exception):
    """Constraint solving exceeded its retry budget."""


class NoCandidate(Exception):
    """House lacks a candidate for a required target class."""


def load_catalog() -> dict:
    text = (resources.files("conav") / "data" / "catalog.json").read_text("utf-8")
    return json.loads(text)


@dataclass
class GridMap:
    width: int
    height: int
    cells: bytes

    def index(self, cell: Cell) -> int:
        x, y = cell
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise OutOfBounds(f"cell {cell} outside {self.width}x{self.height}")
        return y * self.width + x

    def kind_at(self, cell: Cell) -> int:
        return self.cells[self.index(cell)]

    def passable(self, cell: Cell) -> bool:
        return self.kind_at(cell) in (FLOOR, DOOR)

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def passable_mask(self) -> bytes:
        return bytes(1 if k in (FLOOR, DOOR) else 0 for k in self.cells)

    def blocked_mask(self, closed_footprints=None) -> bytes:
        """Sight blockers: walls plus receptacle footprints.

        closed_footprints restricts footprint blocking to the given cell
        indices; None means every footprint blocks (the all-closed worst
        case used by placement checks).
        """
        out = bytearray(self.width * self.height)
        for i, k in enumerate(self.cells):
            if k == WALL:
                out[i] = 1
            elif k == FOOTPRINT:
                if closed_footprints is None or i in closed_footprints:
                    out[i] = 1
        return bytes(out)

    def to_obj(self) -> dict:
        rows = []
        for y in range(self.height):
            row = self.cells[y * self.width:(y + 1) * self.width]
            rows.append("".join(_KIND_CHARS[k] for k in row))
        return {"width": self.width, "height": self.height, "rows": rows}

    @classmethod
    def from_obj(cls, obj: dict) -> "GridMap":
        cells = bytearray()
        for row in obj["rows"]:
            cells.extend(_KIND_CHARS.index(ch) for ch in row)
        return cls(width=obj["width"], height=obj["height"], cells=bytes(cells))


@dataclass
class Room:
    id: str
    kind: str
    bounds: tuple[int, int, int, int]  # inclusive interior (x0, y0, x1, y1)
    receptacle_ids: list[str] = field(default_factory=list)

    @property
    def area(self) -> int:
        x0, y0, x1, y1 = self.bounds
        return (x1 - x0 + 1) * (y1 - y0 + 1)

    def contains(self, cell: Cell) -> bool:
        x0, y0, x1, y1 = self.bounds
        return x0 <= cell[0] <= x1 and y0 <= cell[1] <= y1

    def cells(self) -> list[Cell]:
        x0, y0, x1, y1 = self.bounds
        return [(x, y) for y in range(y0, y1 + 1) for x in range(x0, x1 + 1)]

    def sweep_cells(self) -> list[Cell]:
        """Lattice of scan vantages covering the room.

        A pure function of the bounds: spacing leaves two cells of slack
        against the normal detection range, so an arrival near a vantage
        (rather than exactly on it) still covers the vantage's patch.
        """
        return sweep_lattice(self.bounds)

    def to_obj(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "bounds": list(self.bounds),
            "receptacle_ids": list(self.receptacle_ids),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "Room":
        return cls(
            id=obj["id"],
            kind=obj["kind"],
            bounds=tuple(obj["bounds"]),
            receptacle_ids=list(obj["receptacle_ids"]),
        )


def sweep_lattice(bounds: tuple[int, int, int, int]) -> list[Cell]:
    spacing = 2 * (DETECT_RANGE_NORMAL - 2) + 1

    def axis_points(lo: int, hi: int) -> list[int]:
        length = hi - lo + 1
        n = -(-length // spacing)
        return [lo + (length * (2 * i + 1)) // (2 * n) for i in range(n)]

    x0, y0, x1, y1 = bounds
    return [(x, y) for y in axis_points(y0, y1) for x in axis_points(x0, x1)]


@dataclass
class Door:
    id: str
    cell: Cell
    room_a: str
    room_b: str

    def to_obj(self) -> dict:
        return {
            "id": self.id,
            "cell": list(self.cell),
            "room_a": self.room_a,
            "room_b": self.room_b,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "Door":
        return cls(
            id=obj["id"],
            cell=tuple(obj["cell"]),
            room_a=obj["room_a"],
            room_b=obj["room_b"],
        )


@dataclass
class Receptacle:
    id: str
    category: str
    cell: Cell
    openable: bool
    open_state: bool = False

    def to_obj(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "cell": list(self.cell),
            "openable": self.openable,
            "open_state": self.open_state,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "Receptacle":
        return cls(
            id=obj["id"],
            category=obj["category"],
            cell=tuple(obj["cell"]),
            openable=obj["openable"],
            open_state=obj["open_state"],
        )


@dataclass
class ObjectInstance:
    id: str
    category: str
    cell: Cell
    size_class: str  # "normal" or "small"
    container_id: str | None = None
    is_target: bool = False

    def to_obj(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "cell": list(self.cell),
            "size_class": self.size_class,
            "container_id": self.container_id,
            "is_target": self.is_target,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "ObjectInstance":
        return cls(
            id=obj["id"],
            category=obj["category"],
            cell=tuple(obj["cell"]),
            size_class=obj["size_class"],
            container_id=obj["container_id"],
            is_target=obj["is_target"],
        )


@dataclass
class HouseSpec:
    room_count: int
    seed: int
    room_kind_mix: dict[str, float] | None = None

    def to_obj(self) -> dict:
        return {
            "room_count": self.room_count,
            "seed": self.seed,
            "room_kind_mix": self.room_kind_mix,
        }


@dataclass
class House:
    seed: int
    rooms: list[Room]
    doors: list[Door]
    grid: GridMap
    receptacles: list[Receptacle]
    objects: list[ObjectInstance]
    object_catalog_version: str

    def __post_init__(self) -> None:
        self._rooms_by_id = {r.id: r for r in self.rooms}
        self._receptacles_by_id = {r.id: r for r in self.receptacles}
        self._objects_by_id = {o.id: o for o in self.objects}
        self._room_of_idx: dict[int, str] = {}
        for room in self.rooms:
            for cell in room.cells():
                self._room_of_idx[self.grid.index(cell)] = room.id

    def room_by_id(self, room_id: str) -> Room:
        return self._rooms_by_id[room_id]

    def receptacle_by_id(self, rec_id: str) -> Receptacle:
        return self._receptacles_by_id[rec_id]

    def object_by_id(self, obj_id: str) -> ObjectInstance:
        return self._objects_by_id[obj_id]

    def room_of(self, cell: Cell) -> str | None:
        """Room id owning the cell; None for walls and doors."""
        idx = self.grid.index(cell)
        if self.grid.cells[idx] == DOOR:
            return None
        return self._room_of_idx.get(idx)

    def passable(self, cell: Cell) -> bool:
        return self.grid.passable(cell)

    def doors_of(self, room_id: str) -> list[Door]:
        if room_id not in self._rooms_by_id:
            raise KeyError(room_id)
        return [d for d in self.doors if room_id in (d.room_a, d.room_b)]

    def floor_cells(self) -> list[Cell]:
        out = []
        for y in range(self.grid.height):
            for x in range(self.grid.width):
                if self.grid.cells[y * self.grid.width + x] == FLOOR:
                    out.append((x, y))
        return out

    def receptacles_in(self, room_id: str) -> list[Receptacle]:
        room = self._rooms_by_id[room_id]
        return [self._receptacles_by_id[i] for i in room.receptacle_ids]

    def contents_of(self, rec_id: str) -> list[ObjectInstance]:
        return [o for o in self.objects if o.container_id == rec_id]

    def validate(self) -> None:
        """Assert the structural invariants; raises AssertionError on breach."""
        g = self.grid
        w, h = g.width, g.height
        for x in range(w):
            assert g.cells[x] == WALL and g.cells[(h - 1) * w + x] == WALL
        for y in range(h):
            assert g.cells[y * w] == WALL and g.cells[y * w + w - 1] == WALL

        seen: set[Cell] = set()
        for room in self.rooms:
            assert room.area >= 9, room.id
            assert room.kind in ROOM_KINDS
            for cell in room.cells():
                assert cell not in seen, f"room overlap at {cell}"
                seen.add(cell)
                assert g.kind_at(cell) in (FLOOR, FOOTPRINT)

        for door in self.doors:
            assert door.room_a != door.room_b
            assert g.kind_at(door.cell) == DOOR
            assert g.passable(door.cell)
            x, y = door.cell
            flank_rooms = set()
            for nx, ny in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
                rid = self._room_of_idx.get(g.index((nx, ny)))
                if rid is not None and g.cells[g.index((nx, ny))] != DOOR:
                    flank_rooms.add(rid)
            assert {door.room_a, door.room_b} <= flank_rooms, door.id

        # Door graph connectivity over rooms.
        adj: dict[str, set[str]] = {r.id: set() for r in self.rooms}
        for door in self.doors:
            adj[door.room_a].add(door.room_b)
            adj[door.room_b].add(door.room_a)
        stack = [self.rooms[0].id]
        reached = {self.rooms[0].id}
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in reached:
                    reached.add(nxt)
                    stack.append(nxt)
        assert reached == set(adj), "door graph disconnected"

        # Floor connectivity through floor/door cells.
        floors = self.floor_cells()
        if floors:
            frontier = [floors[0]]
            seen_f = {floors[0]}
            while frontier:
                x, y = frontier.pop()
                for nxt in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
                    if g.in_bounds(nxt) and g.passable(nxt) and nxt not in seen_f:
                        seen_f.add(nxt)
                        frontier.append(nxt)
            missing = [c for c in floors if c not in seen_f]
            assert not missing, f"unreachable floor cells: {missing[:4]}"

        for rec in self.receptacles:
            assert g.kind_at(rec.cell) == FOOTPRINT
            rid = self._room_of_idx.get(g.index(rec.cell))
            assert rid is not None and rec.id in self._rooms_by_id[rid].receptacle_ids

        for obj in self.objects:
            if obj.container_id is not None:
                rec = self._receptacles_by_id[obj.container_id]
                assert rec.openable
                assert obj.cell == rec.cell
            else:
                assert g.kind_at(obj.cell) == FLOOR

    def to_obj(self) -> dict:
        return {
            "seed": self.seed,
            "object_catalog_version": self.object_catalog_version,
            "grid": self.grid.to_obj(),
            "rooms": [r.to_obj() for r in self.rooms],
            "doors": [d.to_obj() for d in self.doors],
            "receptacles": [r.to_obj() for r in self.receptacles],
            "objects": [o.to_obj() for o in self.objects],
        }

    def to_json(self) -> str:
        return canonical_json(self.to_obj())

    @classmethod
    def from_obj(cls, obj: dict) -> "House":
        return cls(
            seed=obj["seed"],
            rooms=[Room.from_obj(r) for r in obj["rooms"]],
            doors=[Door.from_obj(d) for d in obj["doors"]],
            grid=GridMap.from_obj(obj["grid"]),
            receptacles=[Receptacle.from_obj(r) for r in obj["receptacles"]],
            objects=[ObjectInstance.from_obj(o) for o in obj["objects"]],
            object_catalog_version=obj["object_catalog_version"],
        )

    @classmethod
    def from_json(cls, text: str) -> "House":
        return cls.from_obj(json.loads(text))


@dataclass
class Episode:
    seed: int
    targets: list[str]
    spawn_cells: list[Cell]

    def to_obj(self) -> dict:
        return {
            "seed": self.seed,
            "targets": list(self.targets),
            "spawn_cells": [list(c) for c in self.spawn_cells],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "Episode":
        return cls(
            seed=obj["seed"],
            targets=list(obj["targets"]),
            spawn_cells=[tuple(c) for c in obj["spawn_cells"]],
        )


def episode_document(house: House, episode: Episode) -> str:
    """Self-contained JSON for one benchmark episode."""
    return canonical_json({"house": house.to_obj(), "episode": episode.to_obj()})


def load_episode_document(text: str) -> tuple[House, Episode]:
    obj = json.loads(text)
    house = House.from_obj(obj["house"])
    episode = Episode.from_obj(obj["episode"])
    targets = set(episode.targets)
    for o in house.objects:
        o.is_target = o.id in targets
    return house, episode
