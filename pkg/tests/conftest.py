from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

# numba compiles on first call, so per-example deadlines are meaningless here
settings.register_profile("annealbench", deadline=None, max_examples=50)
settings.load_profile("annealbench")

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(autouse=True)
def _isolated_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("ANNEALBENCH_OUTPUT_ROOT", str(tmp_path))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
