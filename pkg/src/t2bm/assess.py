"""Structural correctness assessment of a voxel grid.

Two flags are computed.  *Satisfaction* (S): every required material shows
up among the materials of the component flood-filled from the start point.
*Completeness* (C): after repeatedly removing blocks that participate in no
corner, edge, or plane connecting structure, the surviving main-structure
set is nonempty.

Adjacency is 6-face throughout: diagonal contact does not connect blocks.
Removal within a pruning round is simultaneous (every block is classified
against the set as it stood at the start of the round), which makes the
fixpoint independent of iteration order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fnmatch import fnmatchcase
from importlib import resources
from pathlib import Path

from .interlayer import BlockPoint
from .voxel import VoxelGrid

FACE_NEIGHBORS = (
    (1, 0, 0),
    (-1, 0, 0),
    (0, 1, 0),
    (0, -1, 0),
    (0, 0, 1),
    (0, 0, -1),
)
_AXES = ((1, 0, 0), (0, 1, 0), (0, 0, 1))

DEFAULT_MAX_PRUNE_ITERATIONS = 10_000


class AssessmentError(ValueError):
    pass


class EmptyGrid(AssessmentError):
    """The grid holds no blocks at all."""


class StartPointIsAir(AssessmentError):
    """The configured start point does not resolve to a block."""


class IterationBoundExceeded(AssessmentError):
    """Pruning failed to reach a fixpoint within the configured bound."""


class Connectivity(Enum):
    CORNER = "corner"
    EDGE = "edge"
    PLANE = "plane"


@dataclass(frozen=True)
class MaterialRequirementList:
    """Materials a building must contain for satisfaction.

    Each requirement is either an exact material id or the name of an
    alias group; groups map to glob patterns (``*`` wildcards allowed).
    """

    required: tuple[str, ...]
    aliases: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def matches(self, requirement: str, material: str) -> bool:
        patterns = self.aliases.get(requirement)
        if patterns is None:
            return material == requirement
        return any(fnmatchcase(material, pattern) for pattern in patterns)


@dataclass(frozen=True)
class AssessmentConfig:
    """Tuning knobs; ``start_point=None`` picks the lowest (y, z, x) block."""

    start_point: BlockPoint | None = None
    max_prune_iterations: int = DEFAULT_MAX_PRUNE_ITERATIONS
    edge_min_run: int = 3  # set to 2 for the looser edge rule


@dataclass(frozen=True)
class AssessmentReport:
    satisfaction: bool
    completeness: bool
    materials_found: frozenset[str]
    main_structure: frozenset[BlockPoint]
    visited_count: int
    prune_iterations: int


def parse_aliases(text: str) -> dict[str, tuple[str, ...]]:
    """Parse ``group = id1,id2,...`` lines; ``#`` starts a comment."""
    groups: dict[str, tuple[str, ...]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"alias line without '=': {raw!r}")
        patterns = tuple(p.strip() for p in value.split(",") if p.strip())
        groups[name.strip()] = patterns
    return groups


def load_aliases(path: str | Path | None = None) -> dict[str, tuple[str, ...]]:
    """Load alias groups from a file, or the bundled defaults."""
    if path is None:
        text = resources.files("t2bm.data").joinpath("aliases.txt").read_text(
            encoding="utf-8"
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    return parse_aliases(text)


def flood_fill(
    grid: VoxelGrid, p0: BlockPoint
) -> tuple[frozenset[BlockPoint], frozenset[str]]:
    """Collect the 6-connected component of ``p0`` and its material set.

    Iterative worklist; recursion depth is never a limit.
    """
    start = grid.block_at(p0)
    if start is None:
        raise StartPointIsAir(f"start point {p0} is air or out of bounds")
    visited: set[BlockPoint] = {p0}
    materials: set[str] = {start.material}
    stack = [p0]
    while stack:
        p = stack.pop()
        for dx, dy, dz in FACE_NEIGHBORS:
            q = BlockPoint(p.x + dx, p.y + dy, p.z + dz)
            if q in visited:
                continue
            block = grid.block_at(q)
            if block is None:
                continue
            visited.add(q)
            materials.add(block.material)
            stack.append(q)
    return frozenset(visited), frozenset(materials)


def check_satisfaction(
    materials: frozenset[str] | set[str], reqs: MaterialRequirementList
) -> bool:
    """True iff every requirement matches at least one found material."""
    return all(
        any(reqs.matches(req, material) for material in materials)
        for req in reqs.required
    )


def classify_block(
    points: set[BlockPoint] | frozenset[BlockPoint],
    b: BlockPoint,
    edge_min_run: int = 3,
) -> set[Connectivity]:
    """Connecting structures ``b`` participates in within ``points``.

    Corner: face neighbors along all three orthogonal axes.  Plane: ``b``
    completes a filled 2x2 square in some axis plane.  Edge: ``b`` lies in
    a collinear run of ``edge_min_run`` consecutive blocks.
    """
    out: set[Connectivity] = set()

    neighbor_axes = 0
    for ux, uy, uz in _AXES:
        plus = BlockPoint(b.x + ux, b.y + uy, b.z + uz) in points
        minus = BlockPoint(b.x - ux, b.y - uy, b.z - uz) in points
        if plus or minus:
            neighbor_axes += 1
    if neighbor_axes == 3:
        out.add(Connectivity.CORNER)

    for i in range(3):
        for j in range(i + 1, 3):
            u, v = _AXES[i], _AXES[j]
            for s in (1, -1):
                for t in (1, -1):
                    a = BlockPoint(b.x + s * u[0], b.y + s * u[1], b.z + s * u[2])
                    c = BlockPoint(b.x + t * v[0], b.y + t * v[1], b.z + t * v[2])
                    d = BlockPoint(a.x + t * v[0], a.y + t * v[1], a.z + t * v[2])
                    if a in points and c in points and d in points:
                        out.add(Connectivity.PLANE)

    for ux, uy, uz in _AXES:
        plus1 = BlockPoint(b.x + ux, b.y + uy, b.z + uz)
        minus1 = BlockPoint(b.x - ux, b.y - uy, b.z - uz)
        if edge_min_run <= 2:
            if plus1 in points or minus1 in points:
                out.add(Connectivity.EDGE)
            continue
        plus2 = BlockPoint(b.x + 2 * ux, b.y + 2 * uy, b.z + 2 * uz)
        minus2 = BlockPoint(b.x - 2 * ux, b.y - 2 * uy, b.z - 2 * uz)
        if (
            (plus1 in points and minus1 in points)
            or (plus1 in points and plus2 in points)
            or (minus1 in points and minus2 in points)
        ):
            out.add(Connectivity.EDGE)

    return out


def prune_to_main_structure(
    points: frozenset[BlockPoint] | set[BlockPoint],
    max_iter: int = DEFAULT_MAX_PRUNE_ITERATIONS,
    edge_min_run: int = 3,
) -> tuple[frozenset[BlockPoint], int]:
    """Remove blocks with no connecting structure until a fixpoint.

    Each round removes, simultaneously, every block whose classification
    against the pre-round set is empty.  Returns the surviving set and the
    number of rounds run (the final no-change round counts).
    """
    current = set(points)
    rounds = 0
    while current:
        if rounds >= max_iter:
            raise IterationBoundExceeded(
                f"pruning did not settle within {max_iter} rounds"
            )
        rounds += 1
        keep = {
            b for b in current if classify_block(current, b, edge_min_run=edge_min_run)
        }
        if len(keep) == len(current):
            break
        current = keep
    return frozenset(current), rounds


def default_start_point(grid: VoxelGrid) -> BlockPoint:
    """Deterministic flood-fill origin: the lowest (y, z, x) block."""
    if len(grid) == 0:
        raise EmptyGrid("grid holds no blocks")
    return min((p for p, _ in grid.iterate_blocks()), key=lambda p: (p.y, p.z, p.x))


def assess(
    grid: VoxelGrid,
    reqs: MaterialRequirementList,
    cfg: AssessmentConfig = AssessmentConfig(),
) -> AssessmentReport:
    """Flood-fill, check satisfaction, prune, and report both flags.

    A pruning iteration-bound overflow is reported as incomplete rather
    than raised, since it signals a pathological structure.
    """
    if len(grid) == 0:
        raise EmptyGrid("cannot assess an empty grid")
    p0 = cfg.start_point if cfg.start_point is not None else default_start_point(grid)
    points, materials = flood_fill(grid, p0)
    satisfied = check_satisfaction(materials, reqs)
    try:
        retained, rounds = prune_to_main_structure(
            points, max_iter=cfg.max_prune_iterations, edge_min_run=cfg.edge_min_run
        )
    except IterationBoundExceeded:
        retained, rounds = frozenset(), cfg.max_prune_iterations
    return AssessmentReport(
        satisfaction=satisfied,
        completeness=bool(retained),
        materials_found=materials,
        main_structure=retained,
        visited_count=len(points),
        prune_iterations=rounds,
    )
