from __future__ import annotations

import json
from pathlib import Path

import pytest

from aloha.config import Config
from aloha.providers import BuiltinTranslator, HashedNgramEmbedder, TranslatorChain
from aloha.service import build_state

ASSETS = Path(__file__).resolve().parent.parent / "src" / "aloha" / "assets"


@pytest.fixture(scope="session")
def assets_dir() -> Path:
    return ASSETS


@pytest.fixture(scope="session")
def embedder() -> HashedNgramEmbedder:
    return HashedNgramEmbedder(dim=512)


@pytest.fixture(scope="session")
def demo_state():
    """Shared read-only service state over the bundled demo corpus."""
    return build_state(Config())


@pytest.fixture(scope="session")
def builtin_translator() -> BuiltinTranslator:
    return BuiltinTranslator.from_jsonl(ASSETS / "demo" / "phrase_table.jsonl")


@pytest.fixture(scope="session")
def translator_chain(builtin_translator) -> TranslatorChain:
    return TranslatorChain(builtin=builtin_translator)


def load_jsonl(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


@pytest.fixture(scope="session")
def trilingual_queries() -> list[dict]:
    return load_jsonl(ASSETS / "fixtures" / "trilingual_queries.jsonl")


@pytest.fixture(scope="session")
def langid_eval_set() -> list[dict]:
    return load_jsonl(ASSETS / "fixtures" / "langid_eval.jsonl")


# ---------------------------------------------------------------------------
# Acceptance reporting: one pass/fail line per criterion at the end of the run
# ---------------------------------------------------------------------------

_acceptance_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "call":
        _acceptance_outcomes[report.nodeid] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and report.failed:
        _acceptance_outcomes[report.nodeid] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for nodeid, outcome in sorted(_acceptance_outcomes.items()):
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"[{outcome}] {name}")
