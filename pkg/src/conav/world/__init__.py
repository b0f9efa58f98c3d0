"""Procedural houses, episodes, and the static environment model."""

from conav.world.generate import (
    DEFAULT_ROOM_KIND_MIX,
    generate_episode,
    generate_house,
)
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
    OutOfBounds,
    Receptacle,
    Room,
    episode_document,
    load_catalog,
    load_episode_document,
    sweep_lattice,
)

__all__ = [
    "DEFAULT_ROOM_KIND_MIX",
    "DOOR",
    "Door",
    "Episode",
    "FLOOR",
    "FOOTPRINT",
    "GenerationFailed",
    "GridMap",
    "House",
    "HouseSpec",
    "NoCandidate",
    "ObjectInstance",
    "OutOfBounds",
    "Receptacle",
    "Room",
    "WALL",
    "episode_document",
    "generate_episode",
    "generate_house",
    "load_catalog",
    "load_episode_document",
    "sweep_lattice",
]
