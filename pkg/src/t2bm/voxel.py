"""Voxel rendering of building documents.

Sections are placed sequentially in document order, so later sections
overwrite earlier cells.  A structural section fills its inclusive cuboid;
with the hollow flag set, the strict interior (every axis shrunk by one on
both ends) is carved back to air.  An axis of length two or less has no
interior, and a degenerate carve region means no carving at all, so thin
hollow parts keep every cell.  A functional section places exactly one
block carrying its state map.

Air is represented as cell absence; grids never store air blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .interlayer import ORIGIN, BlockPoint, InterlayerDocument, Section, SectionKind

DEFAULT_CELL_CAP = 16_777_216


class GridTooLarge(ValueError):
    """Grid dimensions exceed the configured cell cap."""


@dataclass(frozen=True)
class Block:
    """A placed cell: material id plus state properties (usually empty)."""

    material: str
    state: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.material:
            raise ValueError("block material must be nonempty")


@dataclass(frozen=True)
class PlacementReport:
    blocks_placed: int
    blocks_carved: int
    sections_placed: int
    out_of_bounds_sections: tuple[str, ...] = ()


class VoxelGrid:
    """Bounded grid of blocks addressed by absolute coordinates.

    Bounds run from ``origin`` (inclusive) over ``dims`` cells per axis.
    Construction is single-writer; a finished grid is safe to share.
    """

    def __init__(
        self,
        origin: BlockPoint = ORIGIN,
        dims: tuple[int, int, int] = (1, 1, 1),
        cell_cap: int = DEFAULT_CELL_CAP,
    ) -> None:
        sx, sy, sz = dims
        if sx < 1 or sy < 1 or sz < 1:
            raise ValueError(f"grid dims must be positive, got {dims}")
        if sx * sy * sz > cell_cap:
            raise GridTooLarge(
                f"grid of {sx}x{sy}x{sz} = {sx * sy * sz} cells exceeds cap {cell_cap}"
            )
        self.origin = origin
        self.dims = (sx, sy, sz)
        self._cells: dict[tuple[int, int, int], Block] = {}

    def __len__(self) -> int:
        return len(self._cells)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VoxelGrid):
            return NotImplemented
        return (
            self.origin == other.origin
            and self.dims == other.dims
            and self._cells == other._cells
        )

    def in_bounds(self, p: BlockPoint) -> bool:
        ox, oy, oz = self.origin.x, self.origin.y, self.origin.z
        sx, sy, sz = self.dims
        return (
            ox <= p.x < ox + sx and oy <= p.y < oy + sy and oz <= p.z < oz + sz
        )

    def set_block(self, p: BlockPoint, block: Block) -> bool:
        """Place a block; out-of-bounds writes are ignored."""
        if not self.in_bounds(p):
            return False
        self._cells[(p.x, p.y, p.z)] = block
        return True

    def clear_block(self, p: BlockPoint) -> bool:
        """Carve a cell back to air; returns whether a block was removed."""
        return self._cells.pop((p.x, p.y, p.z), None) is not None

    def block_at(self, p: BlockPoint) -> Block | None:
        """The block at ``p``, or None for air and out-of-bounds points."""
        return self._cells.get((p.x, p.y, p.z))

    def iterate_blocks(self) -> Iterator[tuple[BlockPoint, Block]]:
        """Yield set cells in ascending (y, z, x) order; deterministic."""
        for x, y, z in sorted(self._cells, key=lambda c: (c[1], c[2], c[0])):
            yield BlockPoint(x, y, z), self._cells[(x, y, z)]

    def points(self) -> frozenset[BlockPoint]:
        return frozenset(BlockPoint(*c) for c in self._cells)


def _section_box(
    section: Section, offset: BlockPoint
) -> tuple[BlockPoint, BlockPoint]:
    if section.kind is SectionKind.STRUCTURAL:
        assert section.extent is not None
        lo, hi = section.extent.normalized()
        return lo.offset(offset), hi.offset(offset)
    assert section.point is not None
    p = section.point.offset(offset)
    return p, p


def _box_cells(lo: BlockPoint, hi: BlockPoint) -> Iterator[BlockPoint]:
    for x in range(lo.x, hi.x + 1):
        for y in range(lo.y, hi.y + 1):
            for z in range(lo.z, hi.z + 1):
                yield BlockPoint(x, y, z)


def place_section(
    grid: VoxelGrid, section: Section, offset: BlockPoint = ORIGIN
) -> tuple[int, int]:
    """Place one section onto an existing grid.

    Returns (cells written, cells carved).  Writes falling outside the
    grid bounds are dropped silently.
    """
    lo, hi = _section_box(section, offset)
    placed = 0
    carved = 0
    if section.kind is SectionKind.FUNCTIONAL:
        if grid.set_block(lo, Block(section.material, dict(section.state))):
            placed += 1
        return placed, carved

    block = Block(section.material)
    for p in _box_cells(lo, hi):
        if grid.set_block(p, block):
            placed += 1
    if section.hollow:
        inner_lo = BlockPoint(lo.x + 1, lo.y + 1, lo.z + 1)
        inner_hi = BlockPoint(hi.x - 1, hi.y - 1, hi.z - 1)
        # No interior on an axis of length <= 2: skip the carve entirely.
        if (
            inner_lo.x <= inner_hi.x
            and inner_lo.y <= inner_hi.y
            and inner_lo.z <= inner_hi.z
        ):
            for p in _box_cells(inner_lo, inner_hi):
                if grid.clear_block(p):
                    carved += 1
    return placed, carved


def synthesize(
    doc: InterlayerDocument,
    offset: BlockPoint = ORIGIN,
    cell_cap: int = DEFAULT_CELL_CAP,
) -> tuple[VoxelGrid, PlacementReport]:
    """Render a document into a grid sized to its bounding box plus offset.

    Sections whose inclusion would push the grid past ``cell_cap`` cells
    are skipped and reported as out of bounds; this is never fatal.
    """
    included: list[Section] = []
    skipped: list[str] = []
    bounds: tuple[BlockPoint, BlockPoint] | None = None
    for section in doc.sections:
        lo, hi = _section_box(section, offset)
        if bounds is None:
            cand_lo, cand_hi = lo, hi
        else:
            cand_lo = BlockPoint(
                min(bounds[0].x, lo.x), min(bounds[0].y, lo.y), min(bounds[0].z, lo.z)
            )
            cand_hi = BlockPoint(
                max(bounds[1].x, hi.x), max(bounds[1].y, hi.y), max(bounds[1].z, hi.z)
            )
        volume = (
            (cand_hi.x - cand_lo.x + 1)
            * (cand_hi.y - cand_lo.y + 1)
            * (cand_hi.z - cand_lo.z + 1)
        )
        if volume > cell_cap:
            skipped.append(section.name)
            continue
        bounds = (cand_lo, cand_hi)
        included.append(section)

    if bounds is None:
        grid = VoxelGrid(origin=offset, dims=(1, 1, 1), cell_cap=cell_cap)
    else:
        lo, hi = bounds
        grid = VoxelGrid(
            origin=lo,
            dims=(hi.x - lo.x + 1, hi.y - lo.y + 1, hi.z - lo.z + 1),
            cell_cap=cell_cap,
        )

    placed = 0
    carved = 0
    for section in included:
        p, c = place_section(grid, section, offset)
        placed += p
        carved += c
    report = PlacementReport(
        blocks_placed=placed,
        blocks_carved=carved,
        sections_placed=len(included),
        out_of_bounds_sections=tuple(skipped),
    )
    return grid, report
