"""House generation tests with an independent flood-fill oracle."""

from __future__ import annotations

import json
from collections import deque

import pytest

from conav.util import chebyshev
from conav.world import (
    DOOR,
    FLOOR,
    FOOTPRINT,
    WALL,
    Episode,
    House,
    HouseSpec,
    NoCandidate,
    OutOfBounds,
    episode_document,
    generate_episode,
    generate_house,
    load_catalog,
    load_episode_document,
    sweep_lattice,
)


def flood_reachable(house: House, start):
    """Test-local flood fill over passable cells."""
    g = house.grid
    seen = {start}
    q = deque([start])
    while q:
        x, y = q.popleft()
        for nxt in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            nx, ny = nxt
            if 0 <= nx < g.width and 0 <= ny < g.height and nxt not in seen:
                if g.cells[ny * g.width + nx] in (FLOOR, DOOR):
                    seen.add(nxt)
                    q.append(nxt)
    return seen


@pytest.fixture(scope="module")
def corpus():
    eps = []
    for k in range(50):
        house = generate_house(HouseSpec(room_count=3 + k % 8, seed=900 + k))
        episode = generate_episode(house, 7000 + k)
        eps.append((house, episode))
    return eps


def test_minimum_room_count_spec():
    house = generate_house(HouseSpec(room_count=3, seed=42))
    assert len(house.rooms) == 3
    house.validate()


def test_room_count_bounds_rejected():
    with pytest.raises(ValueError):
        generate_house(HouseSpec(room_count=2, seed=1))
    with pytest.raises(ValueError):
        generate_house(HouseSpec(room_count=11, seed=1))


def test_ten_rooms_flood_fill_oracle():
    house = generate_house(HouseSpec(room_count=10, seed=7))
    assert len(house.rooms) == 10
    floors = [c for c in house.floor_cells()]
    reached = flood_reachable(house, floors[0])
    for cell in floors:
        assert cell in reached


def test_same_seed_identical_bytes():
    spec = HouseSpec(room_count=6, seed=40406)
    a = generate_house(spec).to_json()
    b = generate_house(spec).to_json()
    assert a == b
    ha = House.from_json(a)
    assert ha.to_json() == a


def test_different_seeds_differ():
    a = generate_house(HouseSpec(room_count=5, seed=1)).to_json()
    b = generate_house(HouseSpec(room_count=5, seed=2)).to_json()
    assert a != b


def test_corpus_structural_invariants(corpus):
    for house, _ in corpus:
        house.validate()
        # Rooms disjoint and big enough.
        cells = set()
        for room in house.rooms:
            assert room.area >= 9
            for c in room.cells():
                assert c not in cells
                cells.add(c)
        # Boundary walls.
        g = house.grid
        for x in range(g.width):
            assert g.cells[x] == WALL
            assert g.cells[(g.height - 1) * g.width + x] == WALL
        # Flood fill from every room reaches all floor cells.
        floors = house.floor_cells()
        reached = flood_reachable(house, floors[0])
        assert all(c in reached for c in floors)


def test_corpus_door_properties(corpus):
    for house, _ in corpus:
        for door in house.doors:
            assert house.passable(door.cell)
            assert house.room_of(door.cell) is None
            assert door.room_a != door.room_b
        for room in house.rooms:
            assert house.doors_of(room.id), f"{room.id} has no door"


def test_corpus_episode_classes(corpus):
    catalog = load_catalog()
    for house, episode in corpus:
        assert len(episode.targets) == 3
        normal, contained, small = [house.object_by_id(t) for t in episode.targets]
        assert normal.size_class == "normal" and normal.container_id is None
        assert contained.container_id is not None
        rec = house.receptacle_by_id(contained.container_id)
        assert rec.openable and not rec.open_state
        assert small.size_class == "small"
        cats = {normal.category, contained.category, small.category}
        assert len(cats) == 3
        for cell in episode.spawn_cells:
            assert house.grid.kind_at(cell) == FLOOR
        assert len(set(episode.spawn_cells)) == len(episode.spawn_cells)
        assert catalog["version"] == house.object_catalog_version


def test_corpus_placement_legality(corpus):
    catalog = load_catalog()
    for house, _ in corpus:
        for obj in house.objects:
            info = catalog["objects"][obj.category]
            if obj.container_id is None:
                room_id = house.room_of(obj.cell)
                assert room_id is not None
                assert house.room_by_id(room_id).kind in info["rooms"]
            else:
                rec = house.receptacle_by_id(obj.container_id)
                assert rec.category in info["containers"]
                assert obj.cell == rec.cell
        for rec in house.receptacles:
            info = catalog["receptacles"][rec.category]
            room_id = house.room_of(rec.cell)
            assert house.room_by_id(room_id).kind in info["rooms"]
            assert rec.openable == info["openable"]


def test_corpus_small_objects_near_furniture(corpus):
    for house, _ in corpus:
        for obj in house.objects:
            if obj.size_class == "small":
                assert any(chebyshev(obj.cell, r.cell) <= 2
                           for r in house.receptacles)


def test_footprint_spacing(corpus):
    for house, _ in corpus:
        cells = [r.cell for r in house.receptacles]
        for i in range(len(cells)):
            for j in range(i + 1, len(cells)):
                assert chebyshev(cells[i], cells[j]) > 1


def test_episode_determinism(corpus):
    house, _ = corpus[0]
    a = generate_episode(house, 333)
    b = generate_episode(house, 333)
    assert a.to_obj() == b.to_obj()


def test_no_candidate_when_nothing_contained():
    house = generate_house(HouseSpec(room_count=4, seed=11))
    bare = House.from_json(house.to_json())
    bare.objects = [o for o in bare.objects if o.container_id is None]
    bare.__post_init__()
    with pytest.raises(NoCandidate):
        generate_episode(bare, 5)


def test_out_of_bounds_lookups():
    house = generate_house(HouseSpec(room_count=3, seed=3))
    with pytest.raises(OutOfBounds):
        house.passable((-1, 0))
    with pytest.raises(OutOfBounds):
        house.room_of((house.grid.width, 0))
    assert house.passable((0, 0)) is False  # boundary wall


def test_sweep_lattice_covers_bounds():
    for bounds in [(1, 1, 3, 3), (2, 5, 18, 9), (1, 1, 31, 19), (4, 4, 16, 30)]:
        points = sweep_lattice(bounds)
        assert points == sweep_lattice(bounds)
        x0, y0, x1, y1 = bounds
        for px, py in points:
            assert x0 <= px <= x1 and y0 <= py <= y1
        for y in range(y0, y1 + 1):
            for x in range(x0, x1 + 1):
                assert any(chebyshev((x, y), p) <= 6 for p in points)


def test_episode_document_round_trip(corpus):
    house, episode = corpus[0]
    text = episode_document(house, episode)
    loaded_house, loaded_episode = load_episode_document(text)
    # is_target flags are applied on load; everything else must round-trip.
    flagged = {o.id for o in loaded_house.objects if o.is_target}
    assert flagged == set(episode.targets)
    for o in loaded_house.objects:
        o.is_target = False
    assert loaded_house.to_json() == house.to_json()
    assert loaded_episode.to_obj() == episode.to_obj()
    assert json.loads(text)["house"]["seed"] == house.seed
