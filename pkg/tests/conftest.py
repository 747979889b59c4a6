import numpy as np
import pytest

from imbrisk.data import Dataset, apply_preprocess, fit_preprocess, generate_synthetic

# filled by test_acceptance.py, printed at the end of the session
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split("AC")[1].split()[0])):
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def imbalanced():
    """1000 rows, 74 positives, already standardized."""
    ds = generate_synthetic(1000, 5, 0.074, 2.0, seed=11)
    return apply_preprocess(ds, fit_preprocess(ds))


@pytest.fixture
def tiny():
    X = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [3.0, 1.0], [4.0, 3.0], [5.0, 5.0]])
    return Dataset(X, np.array([0, 0, 0, 1, 1, 1]), ("a", "b"))
