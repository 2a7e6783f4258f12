import numpy as np
import pytest

from copula_da.copula import estimate_correlation


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, D):
    A = rng.standard_normal((D, D))
    return A @ A.T + D * np.eye(D)


def random_corr(rng, D, rows=None):
    rows = rows or 4 * D + 10
    return estimate_correlation(rng.standard_normal((rows, D)))


ACCEPTANCE = {}


@pytest.fixture
def verdict():
    """Record and print a one-line PASS/FAIL verdict for an acceptance criterion."""

    def record(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        ACCEPTANCE[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
