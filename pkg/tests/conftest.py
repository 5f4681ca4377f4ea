import os
from dataclasses import dataclass
from pathlib import Path

import pytest
from hypothesis import settings

from segrestore.cli import main

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# The seed used throughout the documented example commands.
PIPELINE_SEED = 7
TRAIN_N = 5000
TEST_N = 3500


def run_cli(*args) -> int:
    return main([str(a) for a in args])


@dataclass
class Pipeline:
    root: Path
    tracks: Path
    model_a: Path
    model_b: Path
    report_a: Path
    report_b: Path
    report_b_all: Path

    @property
    def test_csv(self) -> Path:
        return self.model_b.with_name(self.model_b.name + ".test.csv")


def run_pipeline(root: Path, schemes=("B", "A")) -> Pipeline:
    """gen -> train (per scheme) -> eval, exactly as a user would run it."""
    root.mkdir(parents=True, exist_ok=True)
    p = Pipeline(
        root=root,
        tracks=root / "tracks.csv",
        model_a=root / "a" / "a.model",
        model_b=root / "b" / "b.model",
        report_a=root / "report_a",
        report_b=root / "report_b",
        report_b_all=root / "report_b_all",
    )
    assert run_cli("gen", "--n", TRAIN_N + TEST_N, "--seed", PIPELINE_SEED, "--out", p.tracks) == 0
    for scheme in schemes:
        model = p.model_a if scheme == "A" else p.model_b
        model.parent.mkdir(exist_ok=True)
        assert run_cli(
            "train", "--data", p.tracks, "--scheme", scheme,
            "--train-n", TRAIN_N, "--test-n", TEST_N,
            "--seed", PIPELINE_SEED, "--out-model", model,
        ) == 0
        report = p.report_a if scheme == "A" else p.report_b
        assert run_cli(
            "eval", "--model", model, "--test", model.with_name(model.name + ".test.csv"),
            "--mode", "random", "--seed", PIPELINE_SEED, "--threshold", 5, "--out", report,
        ) == 0
    return p


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory) -> Pipeline:
    p = run_pipeline(tmp_path_factory.mktemp("pipeline"))
    assert run_cli(
        "eval", "--model", p.model_b, "--test", p.test_csv,
        "--mode", "all", "--seed", PIPELINE_SEED, "--threshold", 5, "--out", p.report_b_all,
    ) == 0
    return p


def read_report(directory: Path) -> dict:
    out = {}
    for line in (directory / "report.txt").read_text().splitlines():
        key, _, value = line.partition(" = ")
        out[key] = value
    return out


_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(name: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        _CRITERIA.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
