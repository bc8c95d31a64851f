from __future__ import annotations

from pathlib import Path

import pytest

from fuseatlas.harmonize import build_catalog

FIXTURES = Path(__file__).parent / "fixtures"

GENERATED_AT = "2025-01-01T00:00:00Z"


def fixture_lines(name: str) -> list[str]:
    return (FIXTURES / name).read_text(encoding="utf-8").splitlines()


@pytest.fixture(scope="session")
def appendix_lines() -> list[str]:
    return fixture_lines("appendix_2d.jsonl")


@pytest.fixture(scope="session")
def appendix_manifest(appendix_lines):
    manifest, report = build_catalog(appendix_lines, generated_at=GENERATED_AT)
    assert report.ok, [d for d in report.diagnostics if d.severity == "error"]
    return manifest


@pytest.fixture(scope="session")
def case_lines() -> list[str]:
    return fixture_lines("case_study_57.jsonl")


@pytest.fixture(scope="session")
def case_manifest(case_lines):
    manifest, report = build_catalog(case_lines, generated_at=GENERATED_AT)
    assert report.ok
    return manifest


@pytest.fixture(scope="session")
def case_recipe_text() -> str:
    return (FIXTURES / "case_study_recipe.json").read_text(encoding="utf-8")
