import sys
from pathlib import Path

import numpy as np
import pytest

from chanceboost.data import DATASETS_DIR, Attribute, Dataset

sys.path.insert(0, str(Path(__file__).parent))


def numeric_dataset(X, y, classes=("A", "B"), weights=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    attrs = tuple(Attribute.numeric(f"x{j}") for j in range(X.shape[1]))
    return Dataset(attrs, tuple(classes), X, np.asarray(y), weights)


def constant_6040(n=50):
    """One constant attribute, 60% class A and 40% class B."""
    n_a = round(0.6 * n)
    return numeric_dataset(np.zeros(n), [0] * n_a + [1] * (n - n_a))


@pytest.fixture
def separable():
    return numeric_dataset([1, 2, 3, 4], [0, 0, 1, 1])


@pytest.fixture
def xor():
    attrs = (Attribute.nominal("a", ["0", "1"]), Attribute.nominal("b", ["0", "1"]))
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 2, dtype=float)
    return Dataset(attrs, ("F", "T"), X, [0, 1, 1, 0] * 2)


def registered_path(name):
    path = DATASETS_DIR / f"{name}.arff"
    if not path.exists():
        pytest.skip(f"{path} missing; run scripts/build_datasets.py")
    return path


ACCEPTANCE_LINES: list[str] = []


def _order(line):
    head = line.split()[1].rstrip(":")
    return int(head) if head.isdigit() else 99


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=_order):
            terminalreporter.write_line(line)
