"""Grid exporters: game command script, voxel dump, and HTTP placement.

All three targets enumerate the same (point, block) sequence in the same
(y, z, x) order, so golden files stay aligned across formats.  Material
ids regain their ``minecraft:`` namespace prefix on the way out; the dump
loader strips it again.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import requests

from .interlayer import ORIGIN, BlockPoint
from .voxel import DEFAULT_CELL_CAP, Block, VoxelGrid

VOXEL_DUMP_VERSION = 1
DEFAULT_ENDPOINT = "http://localhost:9000"
DEFAULT_BATCH_SIZE = 100


class EndpointUnreachable(RuntimeError):
    """The placement server did not answer the initial version probe."""


class VoxelDumpError(ValueError):
    """Malformed voxel dump file."""


@dataclass(frozen=True)
class PlacementBatchResult:
    sent: int
    acknowledged: int
    failed: tuple[tuple[BlockPoint, str], ...] = ()


def prefixed_id(material: str) -> str:
    return f"minecraft:{material}"


def strip_prefixed_id(block_id: str) -> str:
    prefix = "minecraft:"
    return block_id[len(prefix):] if block_id.startswith(prefix) else block_id


def format_state(state: dict[str, str]) -> str:
    """Bracketed key=value notation; empty state renders as nothing."""
    if not state:
        return ""
    return "[" + ",".join(f"{k}={v}" for k, v in state.items()) + "]"


def export_command_script(
    grid: VoxelGrid, offset: BlockPoint = ORIGIN, path: str | Path = "out.mcfunction"
) -> Path:
    """Write one setblock line per cell, in iteration order."""
    path = Path(path)
    lines = []
    for p, block in grid.iterate_blocks():
        lines.append(
            f"setblock {p.x + offset.x} {p.y + offset.y} {p.z + offset.z} "
            f"{prefixed_id(block.material)}{format_state(block.state)}"
        )
    try:
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write command script to {path}: {exc}") from exc
    return path


def _block_entry(p: BlockPoint, block: Block) -> dict:
    entry: dict = {"id": prefixed_id(block.material), "x": p.x, "y": p.y, "z": p.z}
    if block.state:
        entry["state"] = dict(block.state)
    return entry


def export_voxel_dump(grid: VoxelGrid, path: str | Path = "out.voxels.json") -> Path:
    """Write the canonical machine-readable grid dump (schema v1)."""
    path = Path(path)
    doc = {
        "version": VOXEL_DUMP_VERSION,
        "origin": [grid.origin.x, grid.origin.y, grid.origin.z],
        "dims": list(grid.dims),
        "blocks": [_block_entry(p, b) for p, b in grid.iterate_blocks()],
    }
    try:
        path.write_text(
            json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise OSError(f"cannot write voxel dump to {path}: {exc}") from exc
    return path


def load_voxel_dump(
    path: str | Path, cell_cap: int = DEFAULT_CELL_CAP
) -> VoxelGrid:
    """Reconstruct a grid from a dump; exact inverse of export_voxel_dump."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise VoxelDumpError(f"cannot read voxel dump {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != VOXEL_DUMP_VERSION:
        raise VoxelDumpError(f"{path}: unsupported dump version {doc.get('version')!r}")
    try:
        origin = BlockPoint(*doc["origin"])
        dims = tuple(doc["dims"])
        grid = VoxelGrid(origin=origin, dims=dims, cell_cap=cell_cap)
        for entry in doc["blocks"]:
            point = BlockPoint(entry["x"], entry["y"], entry["z"])
            block = Block(
                strip_prefixed_id(entry["id"]), dict(entry.get("state") or {})
            )
            if not grid.set_block(point, block):
                raise VoxelDumpError(f"{path}: block at {point} is out of bounds")
    except (KeyError, TypeError, ValueError) as exc:
        raise VoxelDumpError(f"{path}: malformed dump: {exc}") from exc
    return grid


def place_via_http(
    grid: VoxelGrid,
    endpoint: str = DEFAULT_ENDPOINT,
    offset: BlockPoint = ORIGIN,
    batch_size: int = DEFAULT_BATCH_SIZE,
    gdpc_axes: bool = False,
    timeout: float = 30.0,
    session: requests.Session | None = None,
) -> PlacementBatchResult:
    """Stream the grid to a block-placement server in fixed-size batches.

    Blocks go out in iteration order as PUT /blocks?x=&y=&z= requests with
    compact JSON array bodies, at most ``batch_size`` entries each.  The
    offset rides in the query string; body coordinates are grid-absolute.
    With ``gdpc_axes`` the y and z components of each block coordinate are
    swapped for clients that treat z as the height axis.  Placement order
    matters, so batches are sent strictly sequentially.

    A failed block never aborts the remaining batches; failures are
    collected per block in the result.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    endpoint = endpoint.rstrip("/")
    http = session or requests.Session()
    try:
        probe = http.get(f"{endpoint}/version", timeout=timeout)
        probe.raise_for_status()
    except requests.RequestException as exc:
        raise EndpointUnreachable(f"no placement server at {endpoint}: {exc}") from exc

    entries: list[tuple[BlockPoint, dict]] = []
    for p, block in grid.iterate_blocks():
        q = BlockPoint(p.x, p.z, p.y) if gdpc_axes else p
        entries.append((p, _block_entry(q, block)))

    params = {"x": offset.x, "y": offset.y, "z": offset.z}
    acknowledged = 0
    failed: list[tuple[BlockPoint, str]] = []
    for start in range(0, len(entries), batch_size):
        batch = entries[start : start + batch_size]
        body = json.dumps([e for _, e in batch], separators=(",", ":"))
        try:
            resp = http.put(
                f"{endpoint}/blocks",
                params=params,
                data=body.encode("utf-8"),
                headers={"Content-Type": "application/json"},
                timeout=timeout,
            )
            resp.raise_for_status()
            results = resp.json()
        except requests.RequestException as exc:
            failed.extend((p, f"request failed: {exc}") for p, _ in batch)
            continue
        except ValueError:
            results = None
        if not isinstance(results, list) or len(results) != len(batch):
            # Server gave a blanket 200 without per-block detail.
            acknowledged += len(batch)
            continue
        for (point, _), result in zip(batch, results):
            if isinstance(result, dict) and result.get("status") == 1:
                acknowledged += 1
            else:
                reason = "rejected"
                if isinstance(result, dict):
                    reason = str(result.get("error") or result.get("status"))
                failed.append((point, reason))
    return PlacementBatchResult(
        sent=len(entries), acknowledged=acknowledged, failed=tuple(failed)
    )
