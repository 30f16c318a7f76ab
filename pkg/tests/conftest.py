from pathlib import Path

import numpy as np
import pytest

from mmpflow.config import parse_config
from mmpflow.dynamics import PhysParams
from mmpflow.spectral import GridSpec

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# Lines reported by the acceptance tests, echoed again in the terminal summary.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def grid8():
    return GridSpec.cube(8)


@pytest.fixture
def grid16():
    return GridSpec.cube(16)


@pytest.fixture
def params():
    return PhysParams(0.3, 0.2, 0.25, 0.15, 0.4)


def load_config(name: str, **overrides):
    """Parse one of the shipped configs, optionally replacing ``section.key`` values."""
    text = (CONFIGS / name).read_text()
    if overrides:
        lines = []
        section = None
        pending = dict(overrides)
        for line in text.splitlines():
            stripped = line.strip()
            if stripped.startswith("["):
                section = stripped[1:-1]
            elif "=" in stripped and not stripped.startswith("#"):
                key = stripped.split("=", 1)[0].strip()
                full = f"{section}.{key}"
                if full in pending:
                    line = f"{key} = {pending.pop(full)}"
            lines.append(line)
        assert not pending, f"overrides for absent keys: {sorted(pending)}"
        text = "\n".join(lines)
    return parse_config(text)


SMALL_CONFIG = """
[grid]
n1 = 16
n2 = 16
n3 = 16
l1 = 2*pi
l2 = 2*pi
l3 = 2*pi

[params]
mu = 0.1
nu = 0.1
gamma = 0.1
kappa = 0.1
chi = 0.1

[init]
seed = 3
spectrum_slope = 0
k_peak = 2
eps_u = 0.1
eps_B = 0.1
eps_w = 0.05

[time]
t_end = 1
dt_max = 0.05
sample_interval = 0.25

[output]
series = series.csv
checkpoint = state.chk
checkpoint_interval = 0.5
"""


@pytest.fixture
def small_config():
    return parse_config(SMALL_CONFIG)


def rel_err(a, b) -> float:
    return float(np.linalg.norm(np.ravel(a - b)) / np.linalg.norm(np.ravel(b)))
