import numpy as np
import pytest

from garch_fis.synthetic import random_walk

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def walk():
    return random_walk(200, seed=7)


@pytest.fixture
def write_csv(tmp_path):
    def _write(values, name="prices.csv", header="date,close", dates=None):
        path = tmp_path / name
        lines = [header]
        for i, v in enumerate(values):
            d = dates[i] if dates is not None else f"2020-01-{i + 1:02d}" if i < 31 else f"day{i}"
            lines.append(f"{d},{v if isinstance(v, str) else repr(float(v))}")
        path.write_text("\n".join(lines) + "\n")
        return path

    return _write


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
