"""Repeated stratified cross-validation and 5%-equivalence comparisons."""

from __future__ import annotations

import enum
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .boosting import BoostConfig, BoostedEnsemble, StopReason, fit
from .data import Dataset
from .learners import LearnerSpec
from .metrics import ContingencyTable, MeasureKind, all_measures

MEASURE_NAMES = tuple(m.value for m in MeasureKind)


def stratified_kfold(data: Dataset, k: int, seed: int = 0) -> list[np.ndarray]:
    """Split instance indices into ``k`` disjoint, class-stratified folds.

    Each class is shuffled and dealt round-robin; the dealer carries on from
    where the previous class stopped, so fold totals also stay within one.
    """
    y = data.y if isinstance(data, Dataset) else np.asarray(data, dtype=np.intp)
    if k < 2:
        raise ValueError("need at least two folds")
    if k > len(y):
        raise ValueError(f"cannot make {k} folds from {len(y)} instances")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    position = 0
    for c in np.unique(y):
        for i in rng.permutation(np.flatnonzero(y == c)):
            folds[position % k].append(int(i))
            position += 1
    return [np.sort(np.array(f, dtype=np.intp)) for f in folds]


def summarize_stats(values: Sequence[float]) -> tuple[float, float, float]:
    """Sample mean, sample SD (n - 1) and the 2-standard-error half-width."""
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2:
        raise ValueError("need at least two values for a standard deviation")
    mean = float(np.mean(x))
    sd = float(np.std(x, ddof=1))
    return mean, sd, 2.0 * sd / math.sqrt(x.size)


@dataclass(frozen=True)
class FoldResult:
    run: int
    fold: int
    measures: dict
    rounds_run: int
    stop_reason: str
    n_members: int


@dataclass(frozen=True)
class Summary:
    mean: float
    sd: float
    two_se: float


@dataclass(frozen=True)
class CVReport:
    description: dict
    folds: tuple[FoldResult, ...]
    runs: int
    k: int
    summary: dict = field(init=False)

    def __post_init__(self):
        if len(self.folds) != self.runs * self.k:
            raise ValueError(f"expected {self.runs * self.k} fold results, got {len(self.folds)}")
        summary = {}
        for name in MEASURE_NAMES:
            summary[name] = Summary(*summarize_stats([f.measures[name] for f in self.folds]))
        object.__setattr__(self, "summary", summary)

    def values(self, measure: str) -> list[float]:
        return [f.measures[MeasureKind.parse(measure).value] for f in self.folds]

    def mean(self, measure: str = "informedness") -> float:
        return self.summary[MeasureKind.parse(measure).value].mean

    @property
    def stop_reasons(self) -> dict[str, int]:
        return dict(sorted(Counter(f.stop_reason for f in self.folds).items()))

    @property
    def rounds_run(self) -> dict[int, int]:
        return dict(sorted(Counter(f.rounds_run for f in self.folds).items()))


def _fold_seed(seed: int, run: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed % 2**64, run, fold]).generate_state(1, np.uint64)[0])


def fit_predictor(train: Dataset, method: BoostConfig | LearnerSpec, seed: int):
    """Train on ``train``; returns (predict function, rounds run, stop reason, member count)."""
    if isinstance(method, LearnerSpec):
        model = method.train(train, None, seed=seed)
        return model.predict, 1, StopReason.COMPLETED.value, 1
    config = BoostConfig(method.measure, method.rounds, method.learner, method.mode,
                         method.subcommittees, seed, method.weight_floor)
    ensemble: BoostedEnsemble = fit(train.with_weights(None), config)
    # A run that never beat chance falls back to its first weak model on its own.
    return ensemble.predict_or_fallback, ensemble.rounds_run, ensemble.stop_reason.value, len(ensemble.members)


def evaluate_fold(data: Dataset, method, train_idx, test_idx, run: int, fold: int, seed: int) -> FoldResult:
    train = data.subset(train_idx)
    test = data.subset(test_idx)
    predict, rounds_run, reason, n_members = fit_predictor(train, method, _fold_seed(seed, run, fold))
    # test tables always use unit weights, never boosting weights
    table = ContingencyTable.from_indices(test.y, predict(test.X), data.n_classes, labels=data.classes)
    return FoldResult(run, fold, all_measures(table), rounds_run, reason, n_members)


def cv_splits(data: Dataset, runs: int, k: int, seed: int):
    """(run, fold, train indices, test indices) for every split; independent of the method."""
    everything = np.arange(data.n_instances)
    for run in range(runs):
        for fold, test_idx in enumerate(stratified_kfold(data, k, seed + run)):
            yield run, fold, np.setdiff1d(everything, test_idx, assume_unique=True), test_idx


def describe_method(method: BoostConfig | LearnerSpec) -> dict:
    if isinstance(method, LearnerSpec):
        return {"learner": method.kind, "booster": "none", "measure": None, "iterations": 1}
    out = {
        "learner": method.learner.kind,
        "booster": method.mode,
        "measure": method.measure.value,
        "iterations": method.rounds,
    }
    if method.mode == "multiboost":
        out["subcommittees"] = method.subcommittees
    return out


def run_repeated_cv(
    data: Dataset,
    method: BoostConfig | LearnerSpec,
    runs: int = 2,
    k: int = 5,
    seed: int = 0,
    jobs: int = 1,
) -> CVReport:
    """``runs`` x ``k``-fold stratified CV of a booster or of a bare base learner.

    Fold assignment depends only on ``seed`` and the data, so every method run
    with the same seed sees the same splits. The seed also fixes each fold's
    learner and wagging seeds.
    """
    splits = list(cv_splits(data, runs, k, seed))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(evaluate_fold, data, method, tr, te, r, f, seed) for r, f, tr, te in splits]
            results = [fut.result() for fut in futures]
    else:
        results = [evaluate_fold(data, method, tr, te, r, f, seed) for r, f, tr, te in splits]
    description = {"dataset": data.relation, **describe_method(method), "runs": runs, "folds": k, "seed": seed}
    return CVReport(description, tuple(results), runs, k)


# ---------------------------------------------------------------------------
# Equivalence accounting


class Outcome(str, enum.Enum):
    EQUI_WIN = "equi_win"
    SIG_BOOST = "sig_boost"
    SIG_LOSS = "sig_loss"
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class ComparisonVerdict:
    dataset: str
    method: float
    reference: float
    outcome: Outcome
    band: float

    @property
    def bounds(self) -> tuple[float, float]:
        return self.reference - self.band, self.reference + self.band


def equivalence_compare(
    method_means: Sequence[float] | Mapping[str, float],
    reference_means: Sequence[float] | Mapping[str, float],
    band: float = 0.05,
) -> list[ComparisonVerdict]:
    """Classify each dataset's score against a reference within an absolute band.

    Within the band a method at or above the reference is an equivalence win;
    outside it the difference is a significant boost or loss.
    """
    if isinstance(method_means, Mapping) != isinstance(reference_means, Mapping):
        raise ValueError("pass both score sets as mappings or both as sequences")
    if isinstance(method_means, Mapping):
        if set(method_means) != set(reference_means):
            raise ValueError("method and reference cover different datasets")
        names = list(method_means)
        pairs = [(method_means[n], reference_means[n]) for n in names]
    else:
        if len(method_means) != len(reference_means):
            raise ValueError(f"{len(method_means)} method scores vs {len(reference_means)} reference scores")
        names = [str(i) for i in range(len(method_means))]
        pairs = list(zip(method_means, reference_means))
    slack = 1e-12
    verdicts = []
    for name, (m, r) in zip(names, pairs):
        diff = m - r
        if abs(diff) <= band + slack:
            outcome = Outcome.EQUI_WIN if diff >= 0 else Outcome.NEUTRAL
        elif diff > 0:
            outcome = Outcome.SIG_BOOST
        else:
            outcome = Outcome.SIG_LOSS
        verdicts.append(ComparisonVerdict(name, float(m), float(r), outcome, band))
    return verdicts


def tally(verdicts: Sequence[ComparisonVerdict]) -> dict[str, int]:
    counts = Counter(v.outcome for v in verdicts)
    return {o.value: counts.get(o, 0) for o in Outcome}
