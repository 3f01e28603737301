from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
FIXTURES_DIR = TESTS_DIR / "fixtures"
GOLDEN_DIR = TESTS_DIR / "golden"

sys.path.insert(0, str(TESTS_DIR))

from t2bm.interlayer import parse_document  # noqa: E402
from t2bm.repair import bundled_registry  # noqa: E402


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture(scope="session")
def two_section_text() -> str:
    return (FIXTURES_DIR / "two_section.json").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def wooden_house_text() -> str:
    return (FIXTURES_DIR / "wooden_house.json").read_text(encoding="utf-8")


@pytest.fixture()
def two_section_doc(two_section_text):
    return parse_document(two_section_text)


@pytest.fixture()
def wooden_house_doc(wooden_house_text):
    return parse_document(wooden_house_text)


@pytest.fixture(scope="session")
def registry():
    return bundled_registry()
