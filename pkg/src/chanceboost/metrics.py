"""Weighted contingency tables and chance-corrected evaluation measures.

Tables are oriented with gold classes on the rows and predicted classes on the
columns. Every measure accepts a :class:`ContingencyTable`; none of them care
about the absolute scale of the cell weights.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

# Below this the chance-corrected denominator is treated as zero.
DEGENERATE_EPS = 1e-12


class MeasureKind(enum.Enum):
    RAND_ACCURACY = "accuracy"
    COHEN_KAPPA = "kappa"
    INFORMEDNESS = "informedness"
    MARKEDNESS = "markedness"
    MATTHEWS_CORRELATION = "matthews"

    @classmethod
    def parse(cls, name: "str | MeasureKind") -> "MeasureKind":
        """Look a measure up by its flag name or a common alias."""
        if isinstance(name, MeasureKind):
            return name
        key = str(name).strip().lower().replace("-", "").replace("_", "")
        try:
            return _ALIASES[key]
        except KeyError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown measure {name!r} (expected one of: {valid})") from None

    @property
    def abbrev(self) -> str:
        return _ABBREV[self]


_ALIASES = {
    "accuracy": MeasureKind.RAND_ACCURACY,
    "randaccuracy": MeasureKind.RAND_ACCURACY,
    "acc": MeasureKind.RAND_ACCURACY,
    "kappa": MeasureKind.COHEN_KAPPA,
    "cohenkappa": MeasureKind.COHEN_KAPPA,
    "kap": MeasureKind.COHEN_KAPPA,
    "informedness": MeasureKind.INFORMEDNESS,
    "bookmaker": MeasureKind.INFORMEDNESS,
    "inf": MeasureKind.INFORMEDNESS,
    "markedness": MeasureKind.MARKEDNESS,
    "mar": MeasureKind.MARKEDNESS,
    "matthews": MeasureKind.MATTHEWS_CORRELATION,
    "matthewscorrelation": MeasureKind.MATTHEWS_CORRELATION,
    "correlation": MeasureKind.MATTHEWS_CORRELATION,
    "mcc": MeasureKind.MATTHEWS_CORRELATION,
}

_ABBREV = {
    MeasureKind.RAND_ACCURACY: "Acc",
    MeasureKind.COHEN_KAPPA: "Kap",
    MeasureKind.INFORMEDNESS: "Inf",
    MeasureKind.MARKEDNESS: "Mar",
    MeasureKind.MATTHEWS_CORRELATION: "Cor",
}


@dataclass(frozen=True)
class ContingencyTable:
    """K x K weighted confusion counts, ``cells[gold, predicted]``."""

    labels: tuple
    cells: np.ndarray

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.float64)
        if cells.ndim != 2 or cells.shape[0] != cells.shape[1]:
            raise ValueError(f"contingency table must be square, got shape {cells.shape}")
        if len(self.labels) != cells.shape[0]:
            raise ValueError(f"{len(self.labels)} labels for a {cells.shape[0]}-class table")
        if cells.shape[0] < 2:
            raise ValueError("contingency table needs at least two classes")
        if not np.all(np.isfinite(cells)) or np.any(cells < 0):
            raise ValueError("contingency cells must be finite and non-negative")
        cells.setflags(write=False)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_indices(cls, gold, predicted, n_classes: int, weights=None, labels=None) -> "ContingencyTable":
        """Fast path for integer-coded labels in ``range(n_classes)``."""
        gold = np.asarray(gold, dtype=np.intp)
        predicted = np.asarray(predicted, dtype=np.intp)
        flat = np.bincount(gold * n_classes + predicted, weights=weights, minlength=n_classes * n_classes)
        if labels is None:
            labels = tuple(range(n_classes))
        return cls(labels, flat.reshape(n_classes, n_classes))

    @property
    def n_classes(self) -> int:
        return self.cells.shape[0]

    @property
    def total(self) -> float:
        return float(self.cells.sum())

    @property
    def row_sums(self) -> np.ndarray:
        return self.cells.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.cells.sum(axis=0)

    def _require_total(self) -> float:
        total = self.total
        if total <= 0:
            raise ValueError("measures are undefined on an empty contingency table")
        return total


@dataclass(frozen=True)
class ClassStats:
    """One-vs-rest statistics of a single class."""

    recall: float
    precision: float
    prevalence: float
    bias: float


def tabulate(
    gold: Sequence[Hashable],
    predicted: Sequence[Hashable],
    weights: Sequence[float] | None = None,
    labels: Sequence[Hashable] | None = None,
) -> ContingencyTable:
    """Accumulate (gold, predicted) pairs into a weighted contingency table.

    ``labels`` fixes the class order; when omitted it is the sorted set of
    labels seen in either sequence. Unit weights are used when ``weights`` is
    None.
    """
    gold = list(gold)
    predicted = list(predicted)
    if len(gold) != len(predicted):
        raise ValueError(f"gold has {len(gold)} labels but predicted has {len(predicted)}")
    if not gold:
        raise ValueError("cannot tabulate zero instances")
    if weights is None:
        w = np.ones(len(gold))
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (len(gold),):
            raise ValueError(f"expected {len(gold)} weights, got {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
    if w.sum() <= 0:
        raise ValueError("weights sum to zero")
    if labels is None:
        labels = sorted(set(gold) | set(predicted))
    index = {label: i for i, label in enumerate(labels)}
    try:
        g = np.fromiter((index[x] for x in gold), dtype=np.intp, count=len(gold))
        p = np.fromiter((index[x] for x in predicted), dtype=np.intp, count=len(predicted))
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} is not in the label list") from None
    return ContingencyTable.from_indices(g, p, len(labels), weights=w, labels=tuple(labels))


def per_class_stats(table: ContingencyTable) -> list[ClassStats]:
    total = table._require_total()
    diag = np.diag(table.cells)
    rows, cols = table.row_sums, table.col_sums
    recall = np.divide(diag, rows, out=np.zeros_like(diag), where=rows > 0)
    precision = np.divide(diag, cols, out=np.zeros_like(diag), where=cols > 0)
    return [
        ClassStats(float(r), float(p), float(rs / total), float(cs / total))
        for r, p, rs, cs in zip(recall, precision, rows, cols)
    ]


def _marginals(table: ContingencyTable):
    total = table._require_total()
    diag = np.diag(table.cells)
    rows, cols = table.row_sums, table.col_sums
    recall = np.divide(diag, rows, out=np.zeros_like(diag), where=rows > 0)
    precision = np.divide(diag, cols, out=np.zeros_like(diag), where=cols > 0)
    return recall, precision, rows / total, cols / total


def _one_vs_rest(gain: np.ndarray, expected: np.ndarray, denom_share: np.ndarray) -> np.ndarray:
    # (gain - expected) / (1 - denom_share), zero wherever the share is 0 or 1
    room = 1.0 - denom_share
    ok = (denom_share > DEGENERATE_EPS) & (room > DEGENERATE_EPS)
    return np.divide(gain - expected, room, out=np.zeros_like(gain), where=ok)


def rand_accuracy(table: ContingencyTable) -> float:
    return float(np.trace(table.cells) / table._require_total())


def cohen_kappa(table: ContingencyTable) -> float:
    """Cohen's kappa; 0 when the chance agreement leaves no room (p_e ~ 1)."""
    _, _, prev, bias = _marginals(table)
    p_o = rand_accuracy(table)
    p_e = float(np.dot(prev, bias))
    if 1.0 - p_e < DEGENERATE_EPS:
        return 0.0
    return (p_o - p_e) / (1.0 - p_e)


def class_informedness(table: ContingencyTable) -> np.ndarray:
    """Per-class dichotomous informedness ``(recall - bias) / (1 - prevalence)``.

    This equals ``tpr - fpr`` of the class against the rest.
    """
    recall, _, prev, bias = _marginals(table)
    return _one_vs_rest(recall, bias, prev)


def class_markedness(table: ContingencyTable) -> np.ndarray:
    """Per-class dichotomous markedness ``(precision - prevalence) / (1 - bias)``."""
    _, precision, prev, bias = _marginals(table)
    return _one_vs_rest(precision, prev, bias)


def informedness(table: ContingencyTable) -> float:
    """Bookmaker informedness.

    The multiclass value is the bias-weighted sum of the one-vs-rest terms:
    each prediction is a bet on its class, so classes count in proportion to
    how often they are predicted. With two classes both one-vs-rest terms are
    equal and this reduces to ``recall_0 + recall_1 - 1``.
    """
    _, _, _, bias = _marginals(table)
    return float(np.dot(bias, class_informedness(table)))


def markedness(table: ContingencyTable) -> float:
    """Markedness, the prevalence-weighted dual of :func:`informedness`."""
    _, _, prev, _ = _marginals(table)
    return float(np.dot(prev, class_markedness(table)))


def matthews_correlation(table: ContingencyTable) -> float:
    """Signed geometric mean of informedness and markedness."""
    inf = informedness(table)
    mark = markedness(table)
    sign = math.copysign(1.0, inf) if inf != 0 else math.copysign(1.0, mark)
    if inf == 0 and mark == 0:
        return 0.0
    return sign * math.sqrt(abs(inf * mark))


def kappa_rescale(kappa: float) -> tuple[float, float]:
    """Map a [-1, 1] chance-corrected score to (accuracy-like, error-like) on [0, 1]."""
    if not -1.0 <= kappa <= 1.0:
        raise ValueError(f"kappa must lie in [-1, 1], got {kappa}")
    return (kappa + 1.0) / 2.0, (1.0 - kappa) / 2.0


_MEASURES = {
    MeasureKind.RAND_ACCURACY: rand_accuracy,
    MeasureKind.COHEN_KAPPA: cohen_kappa,
    MeasureKind.INFORMEDNESS: informedness,
    MeasureKind.MARKEDNESS: markedness,
    MeasureKind.MATTHEWS_CORRELATION: matthews_correlation,
}


def measure_value(measure: MeasureKind | str, table: ContingencyTable) -> float:
    return _MEASURES[MeasureKind.parse(measure)](table)


def all_measures(table: ContingencyTable) -> dict[str, float]:
    """Every measure keyed by its flag name (``"accuracy"``, ``"kappa"``, ...)."""
    return {kind.value: fn(table) for kind, fn in _MEASURES.items()}


def generalized_error(measure: MeasureKind | str, table: ContingencyTable) -> float:
    """Error rate used by the booster.

    Plain ``1 - accuracy`` for Rand accuracy; otherwise the measure is treated
    as a kappa and rescaled so chance maps to 1/2.
    """
    measure = MeasureKind.parse(measure)
    if measure is MeasureKind.RAND_ACCURACY:
        return 1.0 - rand_accuracy(table)
    kappa = min(1.0, max(-1.0, measure_value(measure, table)))
    return kappa_rescale(kappa)[1]
