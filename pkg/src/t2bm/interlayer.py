"""Building-document model and the JSON layouts it is parsed from.

A building document is an ordered collection of named sections.  A section
is either *structural* (a cuboid extent plus a hollow flag) or *functional*
(a single block with an optional state map).  Two JSON layouts are accepted:

* flat layout: sections live at the top level and use a ``location`` key;
* named layout: sections nest under a single building-name key, use a
  ``position`` key, and mark their kind with an explicit ``functional``
  boolean.

Both spellings of the location key are accepted everywhere; serialization
always emits the named-layout keys (``position``/``functional``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

NAMESPACE_PREFIX = "minecraft:"

_EXTENT_KEYS = ("start_x", "start_y", "start_z", "end_x", "end_y", "end_z")
_POINT_KEYS = ("x", "y", "z")
_LOCATION_KEYS = ("location", "position")


class ParseErrorKind(Enum):
    NOT_JSON = "not_json"
    NO_SECTIONS = "no_sections"
    AMBIGUOUS_LOCATION = "ambiguous_location"
    MISSING_MATERIAL = "missing_material"
    CONFLICTING_KIND = "conflicting_kind"
    MULTIPLE_BUILDINGS = "multiple_buildings"


class InterlayerError(ValueError):
    """Base class for document parsing/extraction errors."""


class ExtractFailure(InterlayerError):
    """No balanced JSON object could be located in the text."""


class ParseFailure(InterlayerError):
    """Raised when text cannot be parsed into a building document.

    Carries the failing section name and field path so a repair pass or a
    generation retry can point at the offending spot.
    """

    def __init__(
        self,
        kind: ParseErrorKind,
        message: str,
        section: str | None = None,
        path: str | None = None,
    ) -> None:
        super().__init__(message)
        self.kind = kind
        self.section = section
        self.path = path

    def __str__(self) -> str:
        where = f" at {self.path}" if self.path else ""
        return f"{self.kind.value}{where}: {super().__str__()}"


@dataclass(frozen=True)
class BlockPoint:
    """Integer block coordinate; y is the height axis."""

    x: int
    y: int
    z: int

    def offset(self, other: "BlockPoint") -> "BlockPoint":
        return BlockPoint(self.x + other.x, self.y + other.y, self.z + other.z)


ORIGIN = BlockPoint(0, 0, 0)


@dataclass(frozen=True)
class BlockExtent:
    """Inclusive cuboid between two corners; no corner ordering is assumed."""

    start_x: int
    start_y: int
    start_z: int
    end_x: int
    end_y: int
    end_z: int

    def normalized(self) -> tuple[BlockPoint, BlockPoint]:
        """Return the (min, max) corners with each axis ordered."""
        lo = BlockPoint(
            min(self.start_x, self.end_x),
            min(self.start_y, self.end_y),
            min(self.start_z, self.end_z),
        )
        hi = BlockPoint(
            max(self.start_x, self.end_x),
            max(self.start_y, self.end_y),
            max(self.start_z, self.end_z),
        )
        return lo, hi


class SectionKind(Enum):
    STRUCTURAL = "structural"
    FUNCTIONAL = "functional"


@dataclass(frozen=True)
class Section:
    """One named part of a building.

    Exactly one of ``extent`` (structural) and ``point`` (functional) is
    set; the kind is fixed at parse time.  ``state`` is meaningful only for
    functional sections.  ``extra`` holds unrecognized source fields, which
    survive serialization verbatim but carry no meaning.
    """

    name: str
    material: str
    kind: SectionKind
    extent: BlockExtent | None = None
    point: BlockPoint | None = None
    hollow: bool = False
    state: dict[str, str] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind is SectionKind.STRUCTURAL:
            if self.extent is None or self.point is not None:
                raise ValueError(f"structural section {self.name!r} needs an extent")
        else:
            if self.point is None or self.extent is not None:
                raise ValueError(f"functional section {self.name!r} needs a point")
        if not self.material:
            raise ValueError(f"section {self.name!r} has an empty material")


def structural(
    name: str,
    material: str,
    extent: BlockExtent,
    hollow: bool = False,
    extra: dict[str, Any] | None = None,
) -> Section:
    return Section(
        name=name,
        material=material,
        kind=SectionKind.STRUCTURAL,
        extent=extent,
        hollow=hollow,
        extra=dict(extra or {}),
    )


def functional(
    name: str,
    material: str,
    point: BlockPoint,
    state: dict[str, str] | None = None,
    extra: dict[str, Any] | None = None,
) -> Section:
    return Section(
        name=name,
        material=material,
        kind=SectionKind.FUNCTIONAL,
        point=point,
        state=dict(state or {}),
        extra=dict(extra or {}),
    )


@dataclass(frozen=True)
class InterlayerDocument:
    """Ordered building document; section order is placement order."""

    sections: tuple[Section, ...] = ()
    building_name: str | None = None

    def section_names(self) -> list[str]:
        return [s.name for s in self.sections]


def canonical_material(raw: str) -> str:
    """Strip the game namespace prefix from a material string.

    Only the exact lowercase prefix is removed here; style fixes such as
    case folding belong to the repair pass so they can be logged.
    """
    if raw.startswith(NAMESPACE_PREFIX):
        return raw[len(NAMESPACE_PREFIX):]
    return raw


def extract_json(text: str) -> str:
    """Return the first balanced top-level ``{...}`` region of ``text``.

    Markdown code fences and surrounding prose are skipped implicitly:
    the scan is string-aware, so braces inside JSON strings do not count.
    """
    n = len(text)
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, n):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return text[start : i + 1]
        start = text.find("{", start + 1)
    raise ExtractFailure("no balanced JSON object found in text")


def _coord(value: Any) -> int | None:
    """Accept ints and integral floats as block coordinates."""
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return None


def _state_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _is_section_obj(value: Any) -> bool:
    if not isinstance(value, dict):
        return False
    return any(key in value and isinstance(value[key], dict) for key in _LOCATION_KEYS)


def _parse_section(name: str, obj: dict[str, Any]) -> Section:
    present = [key for key in _LOCATION_KEYS if key in obj]
    if len(present) != 1:
        raise ParseFailure(
            ParseErrorKind.AMBIGUOUS_LOCATION,
            "section carries both 'location' and 'position'",
            section=name,
            path=name,
        )
    loc_key = present[0]
    loc = obj[loc_key]
    if not isinstance(loc, dict):
        raise ParseFailure(
            ParseErrorKind.AMBIGUOUS_LOCATION,
            "location is not an object",
            section=name,
            path=f"{name}.{loc_key}",
        )

    extent_coords = {k: _coord(loc[k]) for k in _EXTENT_KEYS if k in loc}
    point_coords = {k: _coord(loc[k]) for k in _POINT_KEYS if k in loc}
    loc_path = f"{name}.{loc_key}"

    is_extent = set(loc) == set(_EXTENT_KEYS) and all(
        v is not None for v in extent_coords.values()
    )
    is_point = set(loc) == set(_POINT_KEYS) and all(
        v is not None for v in point_coords.values()
    )
    if is_extent == is_point:
        raise ParseFailure(
            ParseErrorKind.AMBIGUOUS_LOCATION,
            f"location must be exactly start/end coordinates or exactly x,y,z "
            f"(got keys {sorted(loc)})",
            section=name,
            path=loc_path,
        )

    flag = obj.get("functional")
    if isinstance(flag, bool):
        if flag and is_extent:
            raise ParseFailure(
                ParseErrorKind.CONFLICTING_KIND,
                "functional=true on a start/end extent",
                section=name,
                path=loc_path,
            )
        if not flag and is_point:
            raise ParseFailure(
                ParseErrorKind.CONFLICTING_KIND,
                "functional=false on a single-point location",
                section=name,
                path=loc_path,
            )

    material_raw = obj.get("material")
    if not isinstance(material_raw, str) or not material_raw.strip():
        raise ParseFailure(
            ParseErrorKind.MISSING_MATERIAL,
            "section has no usable material string",
            section=name,
            path=f"{name}.material",
        )
    material = canonical_material(material_raw)
    if not material:
        raise ParseFailure(
            ParseErrorKind.MISSING_MATERIAL,
            "material is empty after namespace stripping",
            section=name,
            path=f"{name}.material",
        )

    consumed = {loc_key, "material", "functional"}
    if is_extent:
        consumed.add("hollow")
        hollow = obj.get("hollow") is True
        extra = {k: v for k, v in obj.items() if k not in consumed}
        return structural(
            name,
            material,
            BlockExtent(**{k: extent_coords[k] for k in _EXTENT_KEYS}),
            hollow=hollow,
            extra=extra,
        )

    consumed.add("state")
    state: dict[str, str] = {}
    raw_state = obj.get("state")
    if isinstance(raw_state, dict):
        for key, value in raw_state.items():
            if not isinstance(key, str) or not key:
                continue
            text = _state_value(value)
            if text:
                state[key] = text
    # hollow is meaningless on a single block; keep it only as inert extra
    extra = {k: v for k, v in obj.items() if k not in consumed}
    return functional(
        name,
        material,
        BlockPoint(point_coords["x"], point_coords["y"], point_coords["z"]),
        state=state,
        extra=extra,
    )


def parse_document(text: str, mode: str = "strict") -> InterlayerDocument:
    """Parse JSON text into a building document.

    In ``lenient`` mode the first balanced JSON object is extracted first,
    so code fences and surrounding chat prose are tolerated.  Duplicate
    section keys follow stock JSON semantics (the last occurrence wins).

    Raises ParseFailure with the offending section path on malformed input.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"unknown parse mode {mode!r}")
    candidate = text
    if mode == "lenient":
        try:
            candidate = extract_json(text)
        except ExtractFailure as exc:
            raise ParseFailure(ParseErrorKind.NOT_JSON, str(exc)) from exc
    try:
        top = json.loads(candidate)
    except json.JSONDecodeError as exc:
        raise ParseFailure(ParseErrorKind.NOT_JSON, f"invalid JSON: {exc}") from exc
    if not isinstance(top, dict):
        raise ParseFailure(
            ParseErrorKind.NO_SECTIONS, "top-level JSON value is not an object"
        )
    if not top:
        return InterlayerDocument()

    top_sections = [(k, v) for k, v in top.items() if _is_section_obj(v)]
    if top_sections:
        sections = tuple(_parse_section(name, obj) for name, obj in top_sections)
        return InterlayerDocument(sections=sections)

    # No sections at the top: look for exactly one building-name scope.
    buildings = [
        (k, v)
        for k, v in top.items()
        if isinstance(v, dict)
        and (v == {} or any(_is_section_obj(s) for s in v.values()))
    ]
    if len(buildings) > 1:
        names = ", ".join(k for k, _ in buildings)
        raise ParseFailure(
            ParseErrorKind.MULTIPLE_BUILDINGS,
            f"document holds more than one building scope ({names})",
        )
    if len(buildings) == 1:
        bname, body = buildings[0]
        sections = tuple(
            _parse_section(name, obj)
            for name, obj in body.items()
            if _is_section_obj(obj)
        )
        return InterlayerDocument(sections=sections, building_name=bname)

    raise ParseFailure(
        ParseErrorKind.NO_SECTIONS, "no section with a location block was found"
    )


def _section_to_obj(section: Section) -> dict[str, Any]:
    obj: dict[str, Any] = {}
    if section.kind is SectionKind.STRUCTURAL:
        ext = section.extent
        assert ext is not None
        obj["position"] = {k: getattr(ext, k) for k in _EXTENT_KEYS}
        obj["material"] = section.material
        obj["hollow"] = section.hollow
        obj["functional"] = False
    else:
        pt = section.point
        assert pt is not None
        obj["position"] = {"x": pt.x, "y": pt.y, "z": pt.z}
        obj["material"] = section.material
        obj["functional"] = True
        if section.state:
            obj["state"] = dict(section.state)
    obj.update(section.extra)
    return obj


def serialize_document(doc: InterlayerDocument) -> str:
    """Render a document as canonical JSON (named-layout keys, 4-space indent).

    ``parse_document(serialize_document(d))`` reproduces ``d`` exactly.
    """
    body = {s.name: _section_to_obj(s) for s in doc.sections}
    top: dict[str, Any] = {doc.building_name: body} if doc.building_name else body
    return json.dumps(top, indent=4, ensure_ascii=False) + "\n"
