import numpy as np
import pytest
from hypothesis import strategies as st

_CRITERIA: list[tuple[str, bool, str]] = []


@st.composite
def alphas(draw, min_n=2, max_n=8, lo=0.05, hi=0.95):
    """Valid loading vectors with magnitudes in [lo, hi] and random signs."""
    n = draw(st.integers(min_n, max_n))
    mags = draw(st.lists(st.floats(lo, hi), min_size=n, max_size=n))
    signs = draw(st.lists(st.sampled_from([-1.0, 1.0]), min_size=n, max_size=n))
    return np.array(mags) * np.array(signs)


def random_alpha(rng, n, lo=0.05, hi=0.95):
    return rng.uniform(lo, hi, n) * rng.choice([-1.0, 1.0], n)


@pytest.fixture
def record_criterion():
    """Register an acceptance criterion outcome for the end-of-run summary."""

    def record(name: str, ok: bool, detail: str = "") -> None:
        _CRITERIA.append((name, bool(ok), detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _CRITERIA:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f"  ({detail})" if detail else ""))
