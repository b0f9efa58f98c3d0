"""Shared helpers: canonical JSON, named deterministic RNG streams, grid math."""

from __future__ import annotations

import hashlib
import json
import random
from typing import Any

Cell = tuple[int, int]

# Headings are fixed as N, E, S, W; turn_right is +1 mod 4.
HEADINGS = ("N", "E", "S", "W")
HEADING_VECS = {"N": (0, -1), "E": (1, 0), "S": (0, 1), "W": (-1, 0)}


def canonical_json(obj: Any) -> str:
    """Stable serialization used for hashing and byte-identity contracts."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def stable_hash(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def rng_stream(seed: int, name: str) -> random.Random:
    """Independent, named PRNG stream so one concern's draws never perturb another's.

    Derivation goes through sha256 rather than hash() (which is salted per process).
    """
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def chebyshev(a: Cell, b: Cell) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def in_fov(dx: int, dy: int, heading: str) -> bool:
    """90-degree frustum test around a heading; the agent's own cell is excluded."""
    hx, hy = HEADING_VECS[heading]
    dot = dx * hx + dy * hy
    return dot > 0 and 2 * dot * dot >= dx * dx + dy * dy


def turn_left(heading: str) -> str:
    return HEADINGS[(HEADINGS.index(heading) + 3) % 4]


def turn_right(heading: str) -> str:
    return HEADINGS[(HEADINGS.index(heading) + 1) % 4]
