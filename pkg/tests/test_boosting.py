import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import stats

import oracles
from chanceboost.boosting import (
    BoostConfig,
    BoostedEnsemble,
    DegenerateEnsembleError,
    StopReason,
    _wagging_rng,
    adaboost_m1,
    boost_round,
    ensemble_predict,
    fit,
    multiboost,
    perfect_alpha,
    segment_lengths,
    wagging_weights,
)
from chanceboost.learners import LearnerSpec
from chanceboost.metrics import MeasureKind
from conftest import constant_6040, numeric_dataset

ACC, INF, KAP = MeasureKind.RAND_ACCURACY, MeasureKind.INFORMEDNESS, MeasureKind.COHEN_KAPPA


class Constant:
    def __init__(self, label):
        self.label = label

    def predict(self, X):
        return np.full(len(np.atleast_2d(X)), self.label)


def ensemble(members, n_classes=2):
    return BoostedEnsemble(tuple(members), len(members), StopReason.COMPLETED, INF, n_classes)


def noisy_dataset(seed, n=60, classes=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = (np.digitize(X[:, 0] + 0.8 * rng.normal(size=n), [-0.4, 0.4]) % classes)
    return numeric_dataset(X, y, classes=tuple("ABC"[:classes]))


def signature(model):
    from test_learners import signature as sig

    return sig(model.root)


class TestRound:
    def test_classical_six_instance_round(self):
        data = numeric_dataset([1, 2, 3, 4, 5, 6], [0, 0, 0, 1, 1, 0])
        result = boost_round(data, np.full(6, 1 / 6), BoostConfig(ACC, 1))
        assert result.error == pytest.approx(1 / 6, abs=1e-12)
        assert result.beta == pytest.approx(0.2, abs=1e-9)
        assert np.flatnonzero(~result.correct).tolist() == [5]
        assert result.new_weights[5] == pytest.approx(0.5, abs=1e-9)
        assert result.new_weights[:5] == pytest.approx([0.1] * 5, abs=1e-9)

    def test_perfect_round_leaves_weights(self, separable):
        w = np.array([0.1, 0.2, 0.3, 0.4])
        result = boost_round(separable, w, BoostConfig(INF, 1))
        assert result.error == 0.0
        assert np.array_equal(result.new_weights, w)

    def test_chance_round_has_error_half(self):
        data = constant_6040()
        for measure in (INF, KAP):
            result = boost_round(data, np.full(50, 1 / 50), BoostConfig(measure, 1))
            assert result.kappa == pytest.approx(0.0, abs=1e-12)
            assert result.error == 0.5
            assert math.isnan(result.beta)

    @settings(max_examples=80, deadline=None)
    @given(seed=st.integers(0, 10_000), measure=st.sampled_from([ACC, INF, KAP]))
    def test_weight_conservation_and_focus(self, seed, measure):
        data = noisy_dataset(seed, n=40)
        w = np.random.default_rng(seed).dirichlet(np.ones(40))
        r = boost_round(data, w, BoostConfig(measure, 1))
        assert r.new_weights.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(r.new_weights > 0)
        if 0 < r.error < 0.5 and r.correct.any() and (~r.correct).any():
            ratio_before = w[~r.correct].sum() / w[r.correct].sum()
            ratio_after = r.new_weights[~r.correct].sum() / r.new_weights[r.correct].sum()
            assert ratio_after > ratio_before

    @settings(max_examples=80, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_misclassified_weight_is_half(self, seed):
        data = noisy_dataset(seed, n=40)
        w = np.random.default_rng(seed + 1).dirichlet(np.ones(40))
        r = boost_round(data, w, BoostConfig(ACC, 1))
        assume(0 < r.error < 0.5)
        assert r.new_weights[~r.correct].sum() == pytest.approx(0.5, abs=1e-9)


class TestAdaBoost:
    def test_perfect_first_round(self, separable):
        ens = adaboost_m1(separable, BoostConfig(INF, 10))
        assert len(ens.members) == 1
        assert ens.stop_reason is StopReason.PERFECT_ROUND
        assert ens.alphas[0] == pytest.approx(math.log(2 * 4 - 1))
        assert perfect_alpha(4) == pytest.approx(math.log(7))

    def test_early_surrender_divergence(self):
        data = constant_6040()
        acc = adaboost_m1(data, BoostConfig(ACC, 10))
        assert acc.rounds_run >= 1 and len(acc.members) >= 1
        for measure in (INF, KAP):
            ens = adaboost_m1(data, BoostConfig(measure, 10))
            assert ens.stop_reason is StopReason.DEGENERATE
            assert ens.is_degenerate
            with pytest.raises(DegenerateEnsembleError):
                ens.predict(data.X)
            # the fallback is the round-one model: the majority leaf here
            assert set(ens.predict_or_fallback(data.X)) == {0}

    def test_matches_textbook_adaboost(self):
        data = noisy_dataset(3, n=80)
        ens = adaboost_m1(data, BoostConfig(ACC, 15))
        kept = [r for r in ens.history if r.kept]
        preds = [m.predict(data.X) for m, _ in ens.members]
        expected = oracles.adaboost_m1(preds, list(data.y))
        assert len(kept) == len(expected) >= 5
        for rec, (err, beta, alpha, _) in zip(kept, expected):
            assert rec.error == pytest.approx(err, abs=1e-9)
            assert rec.beta == pytest.approx(beta, abs=1e-9)
            assert rec.alpha == pytest.approx(alpha, abs=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), measure=st.sampled_from([ACC, INF, KAP]),
           learner=st.sampled_from(["stump", "tree", "nb"]))
    def test_surrender_soundness_and_positive_alphas(self, seed, measure, learner):
        data = noisy_dataset(seed, n=50)
        ens = adaboost_m1(data, BoostConfig(measure, 8, LearnerSpec(learner), seed=seed))
        assert np.all(ens.alphas > 0)
        kept = [r for r in ens.history if r.kept]
        assert all(r.error < 0.5 for r in kept)
        dropped = [r for r in ens.history if not r.kept]
        assert len(dropped) <= 1
        if dropped:
            assert dropped[0] is ens.history[-1]
            assert dropped[0].error >= 0.5
            assert ens.stop_reason in (StopReason.SURRENDERED, StopReason.DEGENERATE)
        assert ens.rounds_run == len(ens.history)

    def test_seed_determinism(self):
        data = noisy_dataset(7, n=90)
        config = BoostConfig(INF, 6, LearnerSpec("tree"), seed=42)
        a, b = fit(data, config), fit(data, config)
        assert np.array_equal(a.alphas, b.alphas)
        assert [signature(m) for m, _ in a.members] == [signature(m) for m, _ in b.members]
        assert np.array_equal(a.predict(data.X), b.predict(data.X))

    def test_history_weights_are_the_round_inputs(self):
        data = noisy_dataset(1)
        ens = adaboost_m1(data, BoostConfig(ACC, 3))
        first = ens.history[0]
        assert first.w_max == first.w_min == pytest.approx(1 / data.n_instances)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            BoostConfig(INF, 0)
        with pytest.raises(ValueError):
            BoostConfig(INF, 4, mode="bagging")
        with pytest.raises(ValueError):
            BoostConfig(INF, 2, mode="multiboost", subcommittees=3)
        assert BoostConfig("kappa", 3).measure is KAP


class TestMultiBoost:
    @pytest.mark.parametrize("measure", [ACC, INF])
    @pytest.mark.parametrize("learner", ["stump", "tree"])
    def test_one_subcommittee_is_adaboost(self, measure, learner):
        data = noisy_dataset(11, n=70)
        ada = adaboost_m1(data, BoostConfig(measure, 8, LearnerSpec(learner), seed=5))
        mb = multiboost(data, BoostConfig(measure, 8, LearnerSpec(learner), "multiboost", 1, seed=5))
        assert np.array_equal(ada.alphas, mb.alphas)
        assert [signature(m) for m, _ in ada.members] == [signature(m) for m, _ in mb.members]
        assert ada.stop_reason == mb.stop_reason and ada.rounds_run == mb.rounds_run

    def test_segments(self):
        assert segment_lengths(6, 3) == [2, 2, 2]
        assert segment_lengths(26, 3) == [9, 9, 8]
        assert segment_lengths(5, 5) == [1] * 5

    def test_wagging_restarts(self):
        data = noisy_dataset(2, n=120)
        config = BoostConfig(ACC, 6, mode="multiboost", subcommittees=3, seed=9)
        ens = multiboost(data, config)
        assert ens.rounds_run == 6
        assert [r.segment for r in ens.history] == [0, 0, 1, 1, 2, 2]
        rng = _wagging_rng(9)
        for rec in (ens.history[2], ens.history[4]):
            w = wagging_weights(data.n_instances, rng)
            assert (rec.w_max, rec.w_min) == pytest.approx((w.max(), w.min()), rel=1e-12)
        assert ens.history[0].w_max == pytest.approx(1 / 120)

    def test_perfect_round_ends_only_its_segment(self, separable):
        ens = multiboost(separable, BoostConfig(INF, 6, mode="multiboost", subcommittees=3))
        assert len(ens.members) == 3
        assert [r.segment for r in ens.history] == [0, 1, 2]

    def test_all_segments_at_chance_is_degenerate(self):
        ens = multiboost(constant_6040(), BoostConfig(INF, 6, mode="multiboost", subcommittees=3))
        assert ens.stop_reason is StopReason.DEGENERATE
        assert ens.rounds_run == 3


class TestWagging:
    @settings(max_examples=50)
    @given(n=st.integers(1, 500), seed=st.integers(0, 2**32))
    def test_positive_and_normalized(self, n, seed):
        w = wagging_weights(n, seed)
        assert np.all(w > 0)
        assert w.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.array_equal(w, wagging_weights(n, seed))

    @pytest.mark.parametrize("seed", [0, 1, 12345])
    def test_unit_exponential_shape(self, seed):
        n = 10_000
        scaled = n * wagging_weights(n, seed)
        # mean is 1 by construction; the spread must match a unit exponential
        assert scaled.mean() == pytest.approx(1.0, abs=1e-9)
        cv = scaled.std() / scaled.mean()
        se = math.sqrt(2.0 / n)  # approximate standard error of the exponential's CV estimate
        assert abs(cv - 1.0) < 3 * se
        assert stats.kstest(scaled, "expon").pvalue > 1e-3

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            wagging_weights(0, 1)


class TestVote:
    def test_single_member(self):
        assert ensemble_predict(ensemble([(Constant(1), 0.4)]), np.array([0.0])) == 1

    def test_weighted_vote(self):
        assert ensemble_predict(ensemble([(Constant(1), 0.7), (Constant(0), 0.3)]), np.array([0.0])) == 1

    def test_ties_go_to_lowest_class(self):
        assert ensemble_predict(ensemble([(Constant(1), 1.0), (Constant(0), 1.0)]), np.array([0.0])) == 0
        three = ensemble([(Constant(2), 1.0), (Constant(1), 1.0), (Constant(0), 1.0)], n_classes=3)
        assert ensemble_predict(three, np.array([0.0])) == 0

    def test_degenerate_raises(self):
        empty = BoostedEnsemble((), 1, StopReason.DEGENERATE, INF, 2, first_model=Constant(1))
        with pytest.raises(DegenerateEnsembleError):
            empty.predict(np.zeros((2, 1)))
        assert list(empty.predict_or_fallback(np.zeros((2, 1)))) == [1, 1]
