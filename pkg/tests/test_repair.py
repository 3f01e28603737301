from __future__ import annotations

import random

import pytest

from t2bm.interlayer import (
    BlockExtent,
    BlockPoint,
    InterlayerDocument,
    SectionKind,
    functional,
    structural,
)
from t2bm.repair import (
    RegistryError,
    RepairRule,
    bundled_registry,
    normalize_style,
    parse_registry,
    repair_document,
    validate_document,
)

from docgen import random_document

SUPPLEMENTARY_REWRITES = [
    ("bed", "white_bed"),
    ("door", "oak_door"),
    ("planks", "oak_planks"),
    ("carpet", "white_carpet"),
    ("stairs", "oak_stairs"),
    ("glass_panes", "glass_pane"),
    ("iron_ingot", "iron_block"),
]


def doc_with_material(material, state=None):
    if state is not None:
        section = functional("part", material, BlockPoint(0, 0, 0), state=state)
    else:
        section = structural("part", material, BlockExtent(0, 0, 0, 1, 1, 1))
    return InterlayerDocument(sections=(section,))


class TestMaterialRules:
    @pytest.mark.parametrize("stem,expected", SUPPLEMENTARY_REWRITES)
    def test_family_stem_completion(self, registry, stem, expected):
        repaired, log = repair_document(doc_with_material(stem), registry)
        assert repaired.sections[0].material == expected
        assert [e.rule for e in log.entries] == [RepairRule.INCOMPLETE_NAME]
        assert log.entries[0].before == stem
        assert log.entries[0].after == expected

    def test_red_bed_naming_style(self, registry):
        repaired, log = repair_document(doc_with_material("Red Bed"), registry)
        assert repaired.sections[0].material == "red_bed"
        assert [e.rule for e in log.entries] == [RepairRule.WRONG_NAMING_STYLE]

    def test_style_then_completion_chain(self, registry):
        repaired, log = repair_document(doc_with_material("Bed"), registry)
        assert repaired.sections[0].material == "white_bed"
        assert [e.rule for e in log.entries] == [
            RepairRule.WRONG_NAMING_STYLE,
            RepairRule.INCOMPLETE_NAME,
        ]

    def test_namespaced_door_completes(self, registry):
        repaired, log = repair_document(doc_with_material("minecraft:door"), registry)
        assert repaired.sections[0].material == "oak_door"

    def test_illegal_material_falls_back(self, registry):
        repaired, log = repair_document(doc_with_material("chocolate_block"), registry)
        assert repaired.sections[0].material == "oak_planks"
        assert [e.rule for e in log.entries] == [RepairRule.ILLEGAL_MATERIAL]

    def test_canonical_material_unchanged(self, registry):
        doc = doc_with_material("spruce_planks")
        repaired, log = repair_document(doc, registry)
        assert repaired is doc
        assert len(log) == 0

    def test_uppercase_namespace_stripped_by_style_rule(self, registry):
        repaired, _ = repair_document(doc_with_material("Minecraft: Red Bed"), registry)
        assert repaired.sections[0].material == "red_bed"


class TestStateRules:
    def test_occupied_removed_from_bed(self, registry):
        doc = doc_with_material(
            "white_bed", state={"facing": "south", "occupied": "true"}
        )
        repaired, log = repair_document(doc, registry)
        assert repaired.sections[0].state == {"facing": "south"}
        assert [e.rule for e in log.entries] == [RepairRule.DISALLOWED_PROPERTY]
        assert log.entries[0].path == "part.state.occupied"

    def test_open_removed(self, registry):
        doc = doc_with_material("oak_door", state={"open": "true", "hinge": "left"})
        repaired, _ = repair_document(doc, registry)
        assert repaired.sections[0].state == {"hinge": "left"}

    def test_door_keeps_facing_and_hinge(self, registry):
        doc = doc_with_material(
            "oak_door", state={"facing": "south", "hinge": "left"}
        )
        repaired, log = repair_document(doc, registry)
        assert repaired.sections[0].state == {"facing": "south", "hinge": "left"}
        assert len(log) == 0

    def test_key_not_on_family_allowlist_removed(self, registry):
        doc = doc_with_material("lantern", state={"hanging": "true", "part": "head"})
        repaired, _ = repair_document(doc, registry)
        assert repaired.sections[0].state == {"hanging": "true"}

    def test_allowlist_follows_repaired_material(self, registry):
        # "Door" only becomes oak_door after style+completion; its facing
        # state must survive because filtering sees the final material.
        doc = doc_with_material("Door", state={"facing": "south"})
        repaired, _ = repair_document(doc, registry)
        assert repaired.sections[0].material == "oak_door"
        assert repaired.sections[0].state == {"facing": "south"}


class TestValidate:
    def test_empty_document(self, registry):
        assert validate_document(InterlayerDocument(), registry) == []

    def test_red_bed_single_violation(self, registry):
        violations = validate_document(doc_with_material("Red Bed"), registry)
        assert len(violations) == 1
        assert violations[0].rule is RepairRule.WRONG_NAMING_STYLE
        assert violations[0].path == "part.material"

    def test_wooden_house_fixture_is_clean(self, registry, wooden_house_doc):
        repaired, _ = repair_document(wooden_house_doc, registry)
        assert validate_document(repaired, registry) == []

    def test_validate_empty_iff_repair_identity(self, registry):
        rng = random.Random(7)
        for _ in range(100):
            doc = random_document(rng)
            violations = validate_document(doc, registry)
            repaired, log = repair_document(doc, registry)
            assert (not violations) == (repaired == doc)
            assert len(violations) == len(log)


def replay_log(doc: InterlayerDocument, log) -> InterlayerDocument:
    """Re-apply logged before->after substitutions mechanically."""
    from dataclasses import replace

    sections = {s.name: s for s in doc.sections}
    for entry in log.entries:
        section = sections[entry.section]
        parts = entry.path.split(".")
        if parts[1] == "material":
            assert section.material == entry.before
            sections[entry.section] = replace(section, material=entry.after)
        else:
            assert parts[1] == "state"
            key = parts[2]
            assert section.state[key] == entry.before
            assert entry.after == ""
            new_state = {k: v for k, v in section.state.items() if k != key}
            sections[entry.section] = replace(section, state=new_state)
    return replace(
        doc, sections=tuple(sections[s.name] for s in doc.sections)
    )


class TestRepairProperties:
    def test_idempotence(self, registry):
        rng = random.Random(1234)
        for _ in range(300):
            doc = random_document(rng)
            once, _ = repair_document(doc, registry)
            twice, log = repair_document(once, registry)
            assert twice == once
            assert len(log) == 0

    def test_soundness(self, registry):
        rng = random.Random(99)
        for _ in range(300):
            repaired, _ = repair_document(random_document(rng), registry)
            assert validate_document(repaired, registry) == []

    def test_registry_closure(self, registry):
        rng = random.Random(271828)
        for _ in range(300):
            repaired, _ = repair_document(random_document(rng), registry)
            for section in repaired.sections:
                assert section.material in registry.valid_ids

    def test_log_replay_reproduces_repair(self, registry):
        rng = random.Random(31415)
        for _ in range(300):
            doc = random_document(rng)
            repaired, log = repair_document(doc, registry)
            assert replay_log(doc, log) == repaired

    def test_sections_never_dropped(self, registry):
        rng = random.Random(5)
        for _ in range(100):
            doc = random_document(rng)
            repaired, _ = repair_document(doc, registry)
            assert repaired.section_names() == doc.section_names()
            for before, after in zip(doc.sections, repaired.sections):
                assert before.kind is after.kind


class TestNormalizeStyle:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("Red Bed", "red_bed"),
            ("minecraft:oak_planks", "oak_planks"),
            ("Minecraft: Spruce Planks", "spruce_planks"),
            ("OAK_DOOR", "oak_door"),
            ("  glass pane ", "glass_pane"),
            ("already_fine", "already_fine"),
        ],
    )
    def test_cases(self, raw, expected):
        assert normalize_style(raw) == expected


class TestRegistryFile:
    def test_parse_sections(self):
        text = """
# ids
oak_planks
white_bed
glass_pane  # trailing comment
[families]
bed = white_bed
[states]
bed = facing,part
default = facing
[disallowed]
occupied
open
sleeping
"""
        registry = parse_registry(text, "test")
        assert registry.valid_ids == {"oak_planks", "white_bed", "glass_pane"}
        assert registry.families == {"bed": "white_bed"}
        assert registry.allowed_state_keys["bed"] == {"facing", "part"}
        assert registry.disallowed_states == {"occupied", "open", "sleeping"}

    def test_family_default_must_be_valid(self):
        with pytest.raises(RegistryError):
            parse_registry("oak_planks\n[families]\nbed = white_bed\n")

    def test_unknown_section_rejected(self):
        with pytest.raises(RegistryError):
            parse_registry("[wat]\n")

    def test_allowlist_must_avoid_disallowed(self):
        with pytest.raises(RegistryError):
            parse_registry("white_bed\n[states]\nbed = occupied\n")

    def test_unknown_bundled_version_is_an_error(self):
        with pytest.raises(RegistryError):
            bundled_registry("0.0.0")

    def test_bundled_registry_invariants(self, registry):
        assert registry.version == "1.19.2"
        assert "oak_planks" in registry.valid_ids
        for stem, default in SUPPLEMENTARY_REWRITES:
            assert registry.families[stem] == default
            assert stem not in registry.valid_ids
        assert registry.disallowed_states == {"occupied", "open"}

    def test_state_family_suffix_match(self, registry):
        assert registry.state_family("oak_door") == "door"
        assert registry.state_family("light_gray_bed") == "bed"
        assert registry.state_family("wall_torch") == "torch"
        assert registry.state_family("soul_lantern") == "lantern"
        assert registry.state_family("spruce_planks") == "default"
