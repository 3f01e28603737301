"""Seeded random document and grid generators shared across tests."""

from __future__ import annotations

import random

from t2bm.interlayer import (
    BlockExtent,
    BlockPoint,
    InterlayerDocument,
    functional,
    structural,
)

CLEAN_MATERIALS = [
    "oak_planks",
    "spruce_planks",
    "glass_pane",
    "cobblestone",
    "white_bed",
    "oak_door",
    "lantern",
    "stone",
]

MESSY_MATERIALS = CLEAN_MATERIALS + [
    "bed",
    "door",
    "planks",
    "carpet",
    "stairs",
    "glass_panes",
    "iron_ingot",
    "Red Bed",
    "Spruce Planks",
    "minecraft:oak_planks",
    "OAK_DOOR",
    "chocolate_block",
    "widget_3000",
]

STATE_POOL = [
    ("facing", "south"),
    ("facing", "north"),
    ("hinge", "left"),
    ("part", "head"),
    ("occupied", "true"),
    ("open", "true"),
    ("waterlogged", "false"),
]

EXTRA_POOL = [
    ("note", "load-bearing"),
    ("priority", 3),
    ("tags", ["a", "b"]),
    ("hollow", True),
]


def random_point(rng: random.Random, span: int = 20) -> BlockPoint:
    return BlockPoint(
        rng.randint(-span, span), rng.randint(-span, span), rng.randint(-span, span)
    )


def random_extent(rng: random.Random, span: int = 12, size: int = 6) -> BlockExtent:
    sx, sy, sz = (rng.randint(-span, span) for _ in range(3))
    return BlockExtent(
        sx,
        sy,
        sz,
        sx + rng.randint(-size, size),
        sy + rng.randint(-size, size),
        sz + rng.randint(-size, size),
    )


def random_document(
    rng: random.Random, clean: bool = False, max_sections: int = 8
) -> InterlayerDocument:
    """Document built from the type constructors.

    ``clean=True`` keeps materials canonical (safe for round-trip checks,
    which cannot preserve namespace prefixes); the messy pool exercises
    every repair rule.
    """
    pool = CLEAN_MATERIALS if clean else MESSY_MATERIALS
    sections = []
    for index in range(rng.randint(0, max_sections)):
        name = f"part_{index}"
        material = rng.choice(pool)
        if rng.random() < 0.5:
            extra = dict(rng.sample(EXTRA_POOL[:3], rng.randint(0, 2)))
            sections.append(
                structural(
                    name,
                    material,
                    random_extent(rng),
                    hollow=rng.random() < 0.5,
                    extra=extra,
                )
            )
        else:
            state = dict(rng.sample(STATE_POOL, rng.randint(0, 3)))
            extra = dict(rng.sample(EXTRA_POOL, rng.randint(0, 2)))
            sections.append(
                functional(
                    name, material, random_point(rng), state=state, extra=extra
                )
            )
    building = f"building_{rng.randint(0, 99)}" if rng.random() < 0.5 else None
    return InterlayerDocument(sections=tuple(sections), building_name=building)


def random_cells(
    rng: random.Random,
    max_dim: int = 4,
    materials: list[str] | None = None,
    fill: float | None = None,
) -> dict[tuple[int, int, int], str]:
    """Random occupancy map over a box of random dimensions up to max_dim."""
    palette = materials or ["oak_planks", "spruce_planks", "glass_pane", "stone"]
    density = fill if fill is not None else rng.uniform(0.2, 0.9)
    dims = tuple(rng.randint(1, max_dim) for _ in range(3))
    cells = {}
    for x in range(dims[0]):
        for y in range(dims[1]):
            for z in range(dims[2]):
                if rng.random() < density:
                    cells[(x, y, z)] = rng.choice(palette)
    return cells
