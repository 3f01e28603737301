"""Rule-based document repair against a block registry.

Four repair rules run per section, in a fixed order chosen so that style
normalization happens before any registry lookup:

1. wrong naming style  -- lowercase, namespace stripped, spaces to underscores
2. incomplete name     -- bare family stems completed from registry defaults
3. illegal material    -- ids absent from the registry replaced by the fallback
4. disallowed property -- state keys that are banned or not on the material
                          family's allowlist are removed

Repair is total and idempotent; every change is logged with enough detail
to replay it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path

from .interlayer import NAMESPACE_PREFIX, InterlayerDocument, Section, SectionKind

FALLBACK_MATERIAL = "oak_planks"
DEFAULT_DISALLOWED_STATES = frozenset({"occupied", "open"})
DEFAULT_STATE_FAMILY = "default"
BUNDLED_REGISTRY_VERSIONS = {"1.19.2": "registry_1.19.2.txt"}

_WHITESPACE = re.compile(r"\s+")


class RepairRule(Enum):
    INCOMPLETE_NAME = "incomplete_name"
    DISALLOWED_PROPERTY = "disallowed_property"
    ILLEGAL_MATERIAL = "illegal_material"
    WRONG_NAMING_STYLE = "wrong_naming_style"


@dataclass(frozen=True)
class RepairEntry:
    """One applied fix: replaying before->after at ``path`` reproduces it."""

    rule: RepairRule
    section: str
    path: str
    before: str
    after: str


@dataclass(frozen=True)
class RepairLog:
    entries: tuple[RepairEntry, ...] = ()

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Violation:
    rule: RepairRule
    section: str
    path: str
    message: str


class RegistryError(ValueError):
    """Malformed registry data file."""


@dataclass(frozen=True)
class BlockRegistry:
    """Legal block ids for one game version plus repair lookup tables."""

    version: str
    valid_ids: frozenset[str]
    families: dict[str, str] = field(default_factory=dict)
    allowed_state_keys: dict[str, frozenset[str]] = field(default_factory=dict)
    disallowed_states: frozenset[str] = DEFAULT_DISALLOWED_STATES

    def __post_init__(self) -> None:
        for stem, default in self.families.items():
            if default not in self.valid_ids:
                raise RegistryError(
                    f"family default {default!r} (for {stem!r}) is not a valid id"
                )
        for family, keys in self.allowed_state_keys.items():
            bad = keys & self.disallowed_states
            if bad:
                raise RegistryError(
                    f"state family {family!r} allows disallowed keys {sorted(bad)}"
                )

    def state_family(self, material: str) -> str:
        """Longest family whose name is a suffix token of ``material``."""
        best = DEFAULT_STATE_FAMILY
        best_len = -1
        for family in self.allowed_state_keys:
            if family == DEFAULT_STATE_FAMILY:
                continue
            if material == family or material.endswith("_" + family):
                if len(family) > best_len:
                    best = family
                    best_len = len(family)
        return best

    def allowed_keys_for(self, material: str) -> frozenset[str]:
        family = self.state_family(material)
        return self.allowed_state_keys.get(
            family, self.allowed_state_keys.get(DEFAULT_STATE_FAMILY, frozenset())
        )


def parse_registry(text: str, version: str = "unknown") -> BlockRegistry:
    """Parse the registry file format.

    Lines before any section header are block ids, one per line.  Sections:
    ``[families]`` holds ``stem = default_id`` lines, ``[states]`` holds
    ``family = key1,key2`` lines, ``[disallowed]`` holds one state key per
    line.  ``#`` starts a comment anywhere.
    """
    valid: set[str] = set()
    families: dict[str, str] = {}
    states: dict[str, frozenset[str]] = {}
    disallowed: set[str] = set()
    section = "ids"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("families", "states", "disallowed"):
                raise RegistryError(f"line {lineno}: unknown section [{section}]")
            continue
        if section == "ids":
            valid.add(line)
        elif section == "disallowed":
            disallowed.add(line)
        else:
            if "=" not in line:
                raise RegistryError(f"line {lineno}: expected 'name = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key or not value:
                raise RegistryError(f"line {lineno}: empty name or value")
            if section == "families":
                families[key] = value
            else:
                states[key] = frozenset(
                    part.strip() for part in value.split(",") if part.strip()
                )
    return BlockRegistry(
        version=version,
        valid_ids=frozenset(valid),
        families=families,
        allowed_state_keys=states,
        disallowed_states=frozenset(disallowed) or DEFAULT_DISALLOWED_STATES,
    )


def load_registry(path: str | Path, version: str | None = None) -> BlockRegistry:
    path = Path(path)
    return parse_registry(path.read_text(encoding="utf-8"), version or path.stem)


def bundled_registry(version: str = "1.19.2") -> BlockRegistry:
    """Load a registry shipped with the package; unknown versions are an error."""
    try:
        filename = BUNDLED_REGISTRY_VERSIONS[version]
    except KeyError:
        known = ", ".join(sorted(BUNDLED_REGISTRY_VERSIONS))
        raise RegistryError(
            f"no bundled registry for game version {version!r} (have: {known})"
        ) from None
    text = resources.files("t2bm.data").joinpath(filename).read_text(encoding="utf-8")
    return parse_registry(text, version)


def normalize_style(material: str) -> str:
    """Lowercase, strip the namespace prefix, and turn spaces into underscores."""
    fixed = material.lower()
    if fixed.startswith(NAMESPACE_PREFIX):
        fixed = fixed[len(NAMESPACE_PREFIX):]
    return _WHITESPACE.sub("_", fixed.strip())


def _repair_section(
    section: Section, registry: BlockRegistry
) -> tuple[Section, list[RepairEntry]]:
    entries: list[RepairEntry] = []
    name = section.name
    material = section.material

    styled = normalize_style(material)
    if styled != material:
        entries.append(
            RepairEntry(
                RepairRule.WRONG_NAMING_STYLE,
                name,
                f"{name}.material",
                material,
                styled,
            )
        )
        material = styled

    if material not in registry.valid_ids and material in registry.families:
        completed = registry.families[material]
        entries.append(
            RepairEntry(
                RepairRule.INCOMPLETE_NAME,
                name,
                f"{name}.material",
                material,
                completed,
            )
        )
        material = completed

    if material not in registry.valid_ids:
        entries.append(
            RepairEntry(
                RepairRule.ILLEGAL_MATERIAL,
                name,
                f"{name}.material",
                material,
                FALLBACK_MATERIAL,
            )
        )
        material = FALLBACK_MATERIAL

    state = section.state
    if section.kind is SectionKind.FUNCTIONAL and state:
        allowed = registry.allowed_keys_for(material)
        kept: dict[str, str] = {}
        for key, value in state.items():
            if key in registry.disallowed_states or key not in allowed:
                entries.append(
                    RepairEntry(
                        RepairRule.DISALLOWED_PROPERTY,
                        name,
                        f"{name}.state.{key}",
                        value,
                        "",
                    )
                )
            else:
                kept[key] = value
        state = kept

    if not entries:
        return section, entries
    return replace(section, material=material, state=state), entries


def repair_document(
    doc: InterlayerDocument, registry: BlockRegistry
) -> tuple[InterlayerDocument, RepairLog]:
    """Apply all repair rules to every section; never drops a section."""
    new_sections: list[Section] = []
    entries: list[RepairEntry] = []
    for section in doc.sections:
        fixed, section_entries = _repair_section(section, registry)
        new_sections.append(fixed)
        entries.extend(section_entries)
    if not entries:
        return doc, RepairLog()
    return (
        replace(doc, sections=tuple(new_sections)),
        RepairLog(entries=tuple(entries)),
    )


_VIOLATION_MESSAGES = {
    RepairRule.WRONG_NAMING_STYLE: "material name is not in canonical style",
    RepairRule.INCOMPLETE_NAME: "material is a bare family stem",
    RepairRule.ILLEGAL_MATERIAL: "material is not a legal block id",
    RepairRule.DISALLOWED_PROPERTY: "state key cannot be placed",
}


def validate_document(
    doc: InterlayerDocument, registry: BlockRegistry
) -> list[Violation]:
    """Report what repair would change; empty means repair is the identity."""
    _, log = repair_document(doc, registry)
    return [
        Violation(
            rule=e.rule,
            section=e.section,
            path=e.path,
            message=f"{_VIOLATION_MESSAGES[e.rule]} ({e.before!r})",
        )
        for e in log.entries
    ]
