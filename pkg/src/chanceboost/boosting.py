"""AdaBoost.M1 and MultiBoost, parameterised by the evaluation measure.

With ``MeasureKind.RAND_ACCURACY`` the booster is textbook AdaBoost.M1. Any
chance-corrected measure is turned into an error via ``(1 - kappa) / 2``, so
a weak model at chance has error exactly 1/2 and ends boosting. Informedness
gives "AdaBook", Cohen kappa "AdaKap", and likewise MultiBook / MultiKap.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, Instance
from .learners import LearnerSpec, WeakModel
from .metrics import ContingencyTable, MeasureKind, generalized_error, informedness, measure_value, rand_accuracy

PERFECT_EPS = 1e-12
MODES = ("adaboost", "multiboost")


class StopReason(str, enum.Enum):
    COMPLETED = "completed"
    PERFECT_ROUND = "perfect_round"
    SURRENDERED = "surrendered_at_chance"
    DEGENERATE = "degenerate_first_round"


class DegenerateEnsembleError(RuntimeError):
    """Raised when voting with an ensemble that kept no members."""


@dataclass(frozen=True)
class BoostConfig:
    measure: MeasureKind = MeasureKind.RAND_ACCURACY
    rounds: int = 10
    learner: LearnerSpec = field(default_factory=LearnerSpec)
    mode: str = "adaboost"
    subcommittees: int = 3
    seed: int = 0
    weight_floor: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "measure", MeasureKind.parse(self.measure))
        if isinstance(self.learner, str):
            object.__setattr__(self, "learner", LearnerSpec(self.learner))
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        if self.mode not in MODES:
            raise ValueError(f"unknown boosting mode {self.mode!r}; expected one of {MODES}")
        if self.mode == "multiboost" and not 1 <= self.subcommittees <= self.rounds:
            raise ValueError("subcommittees must lie between 1 and the number of rounds")
        if not self.weight_floor > 0:
            raise ValueError("weight_floor must be positive")


@dataclass(frozen=True)
class RoundResult:
    model: WeakModel
    kappa: float
    error: float
    new_weights: np.ndarray
    beta: float
    correct: np.ndarray
    table: ContingencyTable


@dataclass(frozen=True)
class RoundRecord:
    """Per-round diagnostics; ``alpha`` is 0 for discarded rounds."""

    round: int
    segment: int
    kappa: float
    error: float
    beta: float
    alpha: float
    train_accuracy: float
    train_informedness: float
    w_max: float
    w_min: float
    kept: bool


@dataclass(frozen=True, eq=False)
class BoostedEnsemble:
    members: tuple[tuple[WeakModel, float], ...]
    rounds_run: int
    stop_reason: StopReason
    measure: MeasureKind
    n_classes: int
    # model trained on the initial uniform weights, kept even when discarded
    first_model: WeakModel | None = None
    history: tuple[RoundRecord, ...] = ()

    @property
    def is_degenerate(self) -> bool:
        return not self.members

    @property
    def alphas(self) -> np.ndarray:
        return np.array([a for _, a in self.members])

    def votes(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        scores = np.zeros((len(X), self.n_classes))
        rows = np.arange(len(X))
        for model, alpha in self.members:
            scores[rows, model.predict(X)] += alpha
        return scores

    def predict(self, X) -> np.ndarray:
        """Weighted plurality vote, ties to the lowest class index."""
        if self.is_degenerate:
            raise DegenerateEnsembleError(f"ensemble kept no members ({self.stop_reason.value})")
        return np.argmax(self.votes(X), axis=1)

    def predict_or_fallback(self, X) -> np.ndarray:
        """Vote, or use the first weak model alone when nothing was kept."""
        if self.is_degenerate:
            return self.first_model.predict(X)
        return self.predict(X)


def round_seed(seed: int, round_index: int) -> int:
    """Seed handed to the base learner on a given round."""
    return int(np.random.SeedSequence([seed % 2**64, round_index]).generate_state(1, np.uint64)[0])


def boost_round(data: Dataset, weights, config: BoostConfig, round_index: int = 0) -> RoundResult:
    """Train one weak model and compute the reweighted distribution.

    The measure is evaluated on the training table weighted by ``weights``.
    When ``0 < error < 1/2`` every correctly classified instance is scaled by
    ``beta = error / (1 - error)``, weights are floored at
    ``config.weight_floor`` and renormalised to sum to one. Otherwise the
    weights come back unchanged and ``beta`` is NaN.
    """
    w = np.asarray(weights, dtype=np.float64)
    model = config.learner.train(data, w, seed=round_seed(config.seed, round_index))
    pred = model.predict(data.X)
    table = ContingencyTable.from_indices(data.y, pred, data.n_classes, weights=w, labels=data.classes)
    kappa = measure_value(config.measure, table)
    error = generalized_error(config.measure, table)
    correct = pred == data.y
    if PERFECT_EPS < error < 0.5:
        beta = error / (1.0 - error)
        new = w.copy()
        new[correct] *= beta
        new = np.maximum(new, config.weight_floor)
        new /= new.sum()
    else:
        beta = math.nan
        new = w.copy()
    return RoundResult(model, kappa, error, new, beta, correct, table)


def _record(t, segment, result: RoundResult, weights, alpha, kept) -> RoundRecord:
    w = np.asarray(weights)
    return RoundRecord(
        round=t + 1, segment=segment, kappa=result.kappa, error=result.error, beta=result.beta,
        alpha=alpha, train_accuracy=rand_accuracy(result.table),
        train_informedness=informedness(result.table),
        w_max=float(w.max() / w.sum()), w_min=float(w.min() / w.sum()), kept=kept,
    )


def perfect_alpha(n_instances: int) -> float:
    """Vote weight for an error-free round: ln((1 - eps) / eps) with eps = 1 / (2n)."""
    eps = 1.0 / (2 * n_instances)
    return math.log((1.0 - eps) / eps)


def _run_segment(data, config, weights, start, length, segment, members, history):
    """Boost for up to ``length`` rounds; returns (rounds run, how the segment ended, first model)."""
    first_model = None
    w = weights
    for k in range(length):
        t = start + k
        result = boost_round(data, w, config, t)
        if first_model is None:
            first_model = result.model
        if result.error >= 0.5:
            history.append(_record(t, segment, result, w, 0.0, False))
            return k + 1, StopReason.SURRENDERED, first_model
        if result.error <= PERFECT_EPS:
            alpha = perfect_alpha(data.n_instances)
            members.append((result.model, alpha))
            history.append(_record(t, segment, result, w, alpha, True))
            return k + 1, StopReason.PERFECT_ROUND, first_model
        alpha = math.log((1.0 - result.error) / result.error)
        members.append((result.model, alpha))
        history.append(_record(t, segment, result, w, alpha, True))
        w = result.new_weights
    return length, StopReason.COMPLETED, first_model


def _uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def adaboost_m1(data: Dataset, config: BoostConfig) -> BoostedEnsemble:
    """AdaBoost.M1 from uniform weights, with the configured error measure.

    Stops early on a perfect round (kept with a capped vote) or when a round
    fails to beat chance (discarded). Failing on round one leaves an empty
    ensemble with ``stop_reason`` ``degenerate_first_round``.
    """
    members: list = []
    history: list = []
    rounds_run, reason, first = _run_segment(data, config, _uniform(data.n_instances), 0, config.rounds, 0,
                                             members, history)
    if not members:
        reason = StopReason.DEGENERATE
    return BoostedEnsemble(tuple(members), rounds_run, reason, config.measure, data.n_classes, first, tuple(history))


def segment_lengths(rounds: int, subcommittees: int) -> list[int]:
    """Near-equal contiguous segments, the remainder spread over the leading ones."""
    base, extra = divmod(rounds, subcommittees)
    return [base + (1 if i < extra else 0) for i in range(subcommittees)]


def wagging_weights(n: int, rng) -> np.ndarray:
    """Continuous Poisson-style instance weights: ``-ln(u)``, normalised to sum to one."""
    if n < 1:
        raise ValueError("need at least one instance")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    u = 1.0 - rng.random(n)  # (0, 1]
    w = np.maximum(-np.log(u), np.finfo(np.float64).tiny)
    return w / w.sum()


def _wagging_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed % 2**64, 0x3A6]))


def multiboost(data: Dataset, config: BoostConfig) -> BoostedEnsemble:
    """MultiBoost: AdaBoost.M1 over contiguous subcommittees with wagging restarts.

    Each subcommittee after the first starts from fresh wagging weights. A
    round that fails to beat chance, or a perfect round, ends only its own
    subcommittee. Votes from all subcommittees form one flat ensemble.
    """
    members: list = []
    history: list = []
    rng = _wagging_rng(config.seed)
    n = data.n_instances
    first = None
    rounds_run = 0
    reason = StopReason.COMPLETED
    start = 0
    for segment, length in enumerate(segment_lengths(config.rounds, config.subcommittees)):
        weights = _uniform(n) if segment == 0 else wagging_weights(n, rng)
        ran, reason, seg_first = _run_segment(data, config, weights, start, length, segment, members, history)
        if first is None:
            first = seg_first
        rounds_run += ran
        start += length
    if not members:
        reason = StopReason.DEGENERATE
    return BoostedEnsemble(tuple(members), rounds_run, reason, config.measure, data.n_classes, first, tuple(history))


def fit(data: Dataset, config: BoostConfig) -> BoostedEnsemble:
    if config.mode == "multiboost":
        return multiboost(data, config)
    return adaboost_m1(data, config)


def ensemble_predict(ensemble: BoostedEnsemble, instance: Instance | np.ndarray) -> int:
    values = instance.values if isinstance(instance, Instance) else instance
    return int(ensemble.predict(np.asarray(values, dtype=np.float64).reshape(1, -1))[0])
