import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softhad.metrics import agreement_score, agreement_score_brute_force, roc_auc


class TestAgreementScore:
    def test_perfect_concordance(self):
        truth = np.array([0.1, 0.5, 0.3, 0.9])
        assert agreement_score(truth, truth).score == 1.0

    def test_full_reversal(self):
        truth = np.array([0.1, 0.5, 0.3, 0.9])
        assert agreement_score(-truth, truth).score == 0.0

    def test_constant_prediction_half(self):
        truth = np.array([0.1, 0.5, 0.3, 0.9])
        assert agreement_score(np.zeros(4), truth).score == 0.5

    def test_all_truth_equal_rejected(self):
        with pytest.raises(ValueError, match="comparable"):
            agreement_score(np.array([1.0, 2.0]), np.array([3.0, 3.0]))

    def test_truth_ties_excluded_from_pairs(self):
        truth = np.array([1.0, 1.0, 2.0])
        result = agreement_score(np.array([0.0, 1.0, 2.0]), truth)
        assert result.n_pairs == 2
        assert result.score == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            agreement_score(np.zeros(3), np.zeros(4))

    @pytest.mark.parametrize("seed", range(20))
    def test_fast_equals_brute_force_with_ties(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 120))
        # integer grids force plenty of ties in both arguments
        predicted = rng.integers(0, 6, size=n).astype(float)
        truth = rng.integers(0, 4, size=n).astype(float)
        if np.unique(truth).size < 2:
            truth[0] += 1.0
        fast = agreement_score(predicted, truth)
        brute = agreement_score_brute_force(predicted, truth)
        assert fast.score == brute.score
        assert fast.n_pairs == brute.n_pairs

    def test_fast_equals_brute_force_continuous(self):
        rng = np.random.default_rng(99)
        predicted = rng.normal(size=500)
        truth = rng.normal(size=500)
        fast = agreement_score(predicted, truth)
        brute = agreement_score_brute_force(predicted, truth)
        assert fast.score == brute.score

    def test_complement_identity_without_ties(self):
        rng = np.random.default_rng(5)
        predicted = rng.permutation(50).astype(float)
        truth = rng.normal(size=50)
        forward = agreement_score(predicted, truth).score
        reverse = agreement_score(-predicted, truth).score
        assert forward + reverse == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(st.integers(min_value=-50, max_value=50), min_size=2, max_size=60),
        st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_invariant_under_monotone_transform(self, values, seed):
        predicted = np.asarray(values, dtype=float)
        rng = np.random.default_rng(seed)
        truth = rng.integers(0, 5, size=len(predicted)).astype(float)
        if np.unique(truth).size < 2:
            truth[0] += 1.0
        base = agreement_score(predicted, truth)
        transformed = agreement_score(np.exp(predicted / 25.0) * 3.0 + 1.0, truth)
        assert transformed.score == pytest.approx(base.score, abs=1e-12)
        assert transformed.n_pairs == base.n_pairs


class TestRocAuc:
    def test_perfect_separation(self):
        scores = np.array([0.9, 0.8, 0.1, 0.2])
        y = np.array([1, 1, -1, -1])
        assert roc_auc(scores, y) == 1.0

    def test_random_scores_near_half(self):
        rng = np.random.default_rng(123)
        n = 10_000
        scores = rng.normal(size=n)
        y = np.concatenate([np.ones(n // 2, dtype=int), -np.ones(n // 2, dtype=int)])
        assert abs(roc_auc(scores, y) - 0.5) < 0.02

    def test_matches_brute_force_pair_counting(self):
        rng = np.random.default_rng(17)
        scores = rng.normal(size=200)
        y = rng.choice([-1, 1], size=200)
        y[:2] = (1, -1)
        auc = roc_auc(scores, y)
        pos = scores[y == 1]
        neg = scores[y == -1]
        wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (
            pos[:, None] == neg[None, :]
        ).sum()
        assert auc == pytest.approx(wins / (len(pos) * len(neg)), abs=1e-12)

    def test_equals_agreement_score_on_pm_one_truth(self):
        rng = np.random.default_rng(31)
        scores = rng.normal(size=150)
        y = rng.choice([-1, 1], size=150)
        y[:2] = (1, -1)
        assert roc_auc(scores, y) == agreement_score(scores, y.astype(float)).score

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="one class"):
            roc_auc(np.array([0.1, 0.2]), np.array([1, 1]))
