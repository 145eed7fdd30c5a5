import numpy as np
import pytest
import scipy.sparse as sp

from helpers import two_cluster_dataset
from softhad.baselines import (
    fit_gaussian_class_model,
    gaussian_posterior_scores,
    qda_scores,
    weighted_knn_scores,
)
from softhad.datasets import Dataset


class TestWeightedKnnScores:
    def test_label_pure_neighborhood_scores_zero(self):
        W = sp.csr_matrix(np.array([[0.0, 0.7], [0.7, 0.0]]))
        out = weighted_knn_scores(W, np.array([1, 1]))
        np.testing.assert_allclose(out.raw, [0.0, 0.0])

    def test_single_opposite_neighbor_scores_two(self):
        W = sp.csr_matrix(np.array([[0.0, 0.4], [0.4, 0.0]]))
        out = weighted_knn_scores(W, np.array([1, -1]))
        np.testing.assert_allclose(out.raw, [2.0, 2.0])

    def test_five_node_hand_graph(self):
        # node 0 neighbors: 1 (w=0.5, +1), 2 (w=0.25, -1), 3 (w=0.25, -1)
        W = np.zeros((5, 5))
        W[0, 1] = W[1, 0] = 0.5
        W[0, 2] = W[2, 0] = 0.25
        W[0, 3] = W[3, 0] = 0.25
        W[3, 4] = W[4, 3] = 1.0
        y = np.array([1, 1, -1, -1, 1])
        out = weighted_knn_scores(sp.csr_matrix(W), y)
        # ell_0 = (0.5 - 0.25 - 0.25) / 1.0 = 0
        assert out.raw[0] == pytest.approx(1.0)
        # ell_4 = -1, y_4 = +1
        assert out.raw[4] == pytest.approx(2.0)

    def test_zero_degree_node_rejected(self):
        W = sp.csr_matrix((3, 3))
        with pytest.raises(ValueError, match="zero degree"):
            weighted_knn_scores(W, np.array([1, -1, 1]))

    def test_accepts_similarity_graph(self):
        from softhad.graph import build_knn_graph

        rng = np.random.default_rng(0)
        X = rng.normal(size=(10, 2))
        G = build_knn_graph(X, np.ones(2), 1.0, 3)
        y = rng.choice([-1, 1], size=10)
        out = weighted_knn_scores(G, y)
        assert out.raw.shape == (10,)
        assert np.all(out.raw >= 0) and np.all(out.raw <= 2)


class TestQdaScores:
    def test_well_separated_correct_labels_near_zero(self):
        past, rng = two_cluster_dataset(0, n_per=200, sep=10.0)
        recent = Dataset(X=np.array([[0.0, 0.0], [10.0, 0.0]]), y=np.array([1, -1]))
        out = qda_scores(past, recent)
        assert np.all(out.raw < 1e-6)

    def test_symmetric_midpoint_half(self):
        rng = np.random.default_rng(1)
        base = rng.normal(0.0, 1.0, (400, 2))
        X = np.vstack([base + [3.0, 0.0], -base + [-3.0, 0.0]])
        y = np.concatenate([np.ones(400, dtype=int), -np.ones(400, dtype=int)])
        train = Dataset(X=X, y=y)
        # mirrored samples give exactly mirrored fits and equal priors
        probe = Dataset(X=np.zeros((2, 2)), y=np.array([1, -1]))
        out = qda_scores(train, probe)
        np.testing.assert_allclose(out.raw, 0.5, atol=1e-12)

    def test_one_dimensional_closed_form(self):
        rng = np.random.default_rng(2)
        x_pos = rng.normal(1.0, 1.0, 60)
        x_neg = rng.normal(-1.0, 2.0, 80)
        X = np.concatenate([x_pos, x_neg]).reshape(-1, 1)
        y = np.concatenate([np.ones(60, dtype=int), -np.ones(80, dtype=int)])
        model = fit_gaussian_class_model(X, y, reg=0.0)

        def hand_posterior_opposite(x, label):
            out = {}
            for cls, vals in ((1, x_pos), (-1, x_neg)):
                mu = vals.mean()
                var = vals.var(ddof=1)
                prior = len(vals) / 140.0
                out[cls] = prior * np.exp(-0.5 * (x - mu) ** 2 / var) / np.sqrt(
                    2 * np.pi * var
                )
            return out[-label] / (out[1] + out[-1])

        for x, label in ((0.3, 1), (-1.2, -1), (2.0, -1)):
            got = gaussian_posterior_scores(
                model, np.array([[x]]), np.array([label])
            )[0]
            assert got == pytest.approx(hand_posterior_opposite(x, label), abs=1e-9)

    def test_posterior_in_unit_interval(self):
        past, _ = two_cluster_dataset(3, n_per=100, sep=4.0)
        out = qda_scores(past, past)
        assert np.all(out.raw >= 0.0) and np.all(out.raw <= 1.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_affine_rescaling_invariance(self, seed):
        # exact property of the unregularized posterior; the default ridge
        # perturbs scores at its own ~1e-6 relative magnitude
        past, rng = two_cluster_dataset(seed, n_per=150, sep=5.0)
        recent = Dataset(X=rng.normal(2.0, 3.0, (40, 2)), y=rng.choice([-1, 1], 40))
        base = qda_scores(past, recent, reg=0.0).raw
        scale = rng.uniform(0.5, 2.0, size=2)
        shift = rng.uniform(-5.0, 5.0, size=2)
        past_t = Dataset(X=past.X * scale + shift, y=past.y)
        recent_t = Dataset(X=recent.X * scale + shift, y=recent.y)
        transformed = qda_scores(past_t, recent_t, reg=0.0).raw
        np.testing.assert_allclose(transformed, base, atol=1e-6)

    def test_singular_covariance_advises_larger_reg(self):
        X = np.array([[1.0, 1.0]] * 4 + [[2.0, 2.0]] * 4)
        y = np.array([1, 1, 1, 1, -1, -1, -1, -1])
        with pytest.raises(ValueError, match="increase reg"):
            fit_gaussian_class_model(X, y, reg=0.0)

    def test_single_class_rejected(self):
        X = np.random.default_rng(5).normal(size=(6, 2))
        with pytest.raises(ValueError, match="one class"):
            fit_gaussian_class_model(X, np.ones(6, dtype=int))
