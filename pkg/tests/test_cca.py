import numpy as np
import pytest

from s3mprobe.cca import (
    CcaResult,
    ViewPair,
    cca_protocol,
    evaluate_cca,
    fit_cca,
    pwcca_score,
)
from s3mprobe.errors import (
    ConditioningError,
    DegenerateInputError,
    InsufficientDataError,
)
from s3mprobe.featurestore import SegmentSample, WordSpan, build_onehot_table

from oracles import cca_correlations_eig


def _random_invertible(rng, d, max_cond=1e3):
    while True:
        m = rng.normal(size=(d, d))
        if np.linalg.cond(m) <= max_cond:
            return m


class TestFitCca:
    def test_identity_view(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(300, 8))
        res = fit_cca(ViewPair(x, x.copy()), ridge=1e-10)
        assert np.all(res.rho > 1 - 1e-6)
        assert res.rho.shape == (8,)

    def test_rho_sorted_and_bounded(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            x = rng.normal(size=(200, 6))
            y = rng.normal(size=(200, 4))
            res = fit_cca(ViewPair(x, y), ridge=1e-8)
            assert (np.diff(res.rho) <= 1e-8).all()
            assert (res.rho >= 0).all() and (res.rho <= 1).all()

    def test_noise_sweep_against_eig_oracle(self):
        rng = np.random.default_rng(2)
        n, d = 2000, 20
        x = rng.normal(size=(n, d))
        a = _random_invertible(rng, d)
        mean_rhos = []
        for sigma in (0.0, 0.1, 1.0, 10.0):
            y = x @ a + sigma * rng.normal(size=(n, d))
            res = fit_cca(ViewPair(x, y), ridge=0.0)
            oracle = cca_correlations_eig(x, y, ridge=0.0)
            assert np.abs(res.rho - oracle).max() <= 1e-8
            mean_rhos.append(res.rho.mean())
        assert np.all(res.rho[-1] >= 0)
        assert mean_rhos[0] > 1 - 1e-8          # sigma=0: all ones
        assert np.all(np.diff(mean_rhos) < 0)   # correlations fall as noise grows

    def test_independent_views_below_permutation_null(self):
        rng = np.random.default_rng(3)
        n, d = 5000, 10
        x = rng.normal(size=(n, d))
        y = rng.normal(size=(n, d))
        observed = fit_cca(ViewPair(x, y), ridge=1e-8).rho.mean()
        null = []
        for _ in range(100):
            perm = rng.permutation(n)
            null.append(fit_cca(ViewPair(x, y[perm]), ridge=1e-8).rho.mean())
        assert observed <= np.percentile(null, 99)

    def test_insufficient_data(self):
        rng = np.random.default_rng(4)
        with pytest.raises(InsufficientDataError):
            fit_cca(ViewPair(rng.normal(size=(5, 5)), rng.normal(size=(5, 3))))

    def test_singular_needs_ridge(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(50, 4))
        x = np.hstack([x, x[:, :1]])  # duplicated column -> singular covariance
        y = rng.normal(size=(50, 3))
        with pytest.raises(ConditioningError):
            fit_cca(ViewPair(x, y), ridge=0.0)
        res = fit_cca(ViewPair(x, y), ridge=1e-6)
        assert res.rho.shape[0] == min(4, 3)  # rank-aware component count

    def test_variates_uncorrelated_within_view(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(400, 7))
        y = rng.normal(size=(400, 5))
        res = fit_cca(ViewPair(x, y), ridge=0.0)
        h = (x - res.mean_x) @ res.vx
        gram = h.T @ h / (x.shape[0] - 1)
        off = gram - np.diag(np.diag(gram))
        assert np.abs(off).max() <= 1e-6
        assert np.abs(np.diag(gram) - 1).max() <= 1e-6

    def test_pre_reduction_toggle(self):
        rng = np.random.default_rng(17)
        x = rng.normal(size=(400, 8))
        y = x @ rng.normal(size=(8, 6)) + rng.normal(size=(400, 6))
        full = fit_cca(ViewPair(x, y), ridge=0.0)
        kept = fit_cca(ViewPair(x, y), ridge=0.0, pre_reduce=1.0)
        assert np.abs(full.rho - kept.rho).max() <= 1e-8
        # low-variance directions dropped: fewer components survive
        x_aniso = x * np.array([100.0] * 2 + [1e-3] * 6)
        truncated = fit_cca(ViewPair(x_aniso, y), ridge=0.0, pre_reduce=0.99)
        assert truncated.rho.size < full.rho.size
        assert truncated.vx.shape == (8, truncated.rho.size)
        # projections still live in the original coordinates
        pwcca_score(truncated, x_aniso)

    def test_invariance_under_invertible_transforms(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(500, 6))
        y = rng.normal(size=(500, 4))
        base = fit_cca(ViewPair(x, y), ridge=0.0).rho
        for _ in range(5):
            ax = _random_invertible(rng, 6)
            ay = _random_invertible(rng, 4)
            rho_x = fit_cca(ViewPair(x @ ax, y), ridge=0.0).rho
            rho_y = fit_cca(ViewPair(x, y @ ay), ridge=0.0).rho
            assert np.abs(rho_x - base).max() <= 1e-6
            assert np.abs(rho_y - base).max() <= 1e-6


class TestPwcca:
    def test_hand_case(self):
        # orthogonal variates with squared norms 3 and 1 give weights (.75, .25)
        x = np.array([[np.sqrt(3.0), 0.0], [0.0, 1.0]])
        res = CcaResult(
            rho=np.array([0.8, 0.2]),
            vx=np.eye(2), vy=np.eye(2),
            mean_x=np.zeros(2), mean_y=np.zeros(2),
        )
        score = pwcca_score(res, x)
        assert score == pytest.approx(0.65, abs=1e-12)
        assert res.alpha == pytest.approx([0.75, 0.25])

    def test_all_ones_and_all_zeros(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(100, 3))
        for value, expected in ((1.0, 1.0), (0.0, 0.0)):
            res = CcaResult(
                rho=np.full(3, value), vx=np.eye(3), vy=np.eye(3),
                mean_x=np.zeros(3), mean_y=np.zeros(3),
            )
            assert pwcca_score(res, x) == pytest.approx(expected)

    def test_zero_view_degenerate(self):
        res = CcaResult(rho=np.array([1.0]), vx=np.ones((2, 1)), vy=np.ones((2, 1)),
                        mean_x=np.zeros(2), mean_y=np.zeros(2))
        with pytest.raises(DegenerateInputError):
            pwcca_score(res, np.zeros((10, 2)))

    def test_identity_scores_one(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(200, 5))
        res = fit_cca(ViewPair(x, x.copy()), ridge=1e-8)
        assert pwcca_score(res, x) >= 0.999

    def test_bounds_and_convexity(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            x = rng.normal(size=(150, 4))
            y = rng.normal(size=(150, 4))
            res = fit_cca(ViewPair(x, y), ridge=1e-8)
            score = pwcca_score(res, x)
            assert 0.0 <= score <= 1.0
            assert res.rho.min() - 1e-12 <= score <= res.rho.max() + 1e-12

    def test_invariant_under_y_transform(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(500, 5))
        y = x @ rng.normal(size=(5, 5)) + 0.5 * rng.normal(size=(500, 5))
        res = fit_cca(ViewPair(x, y), ridge=0.0)
        assert np.diff(res.rho).max() < -1e-6  # distinct correlations
        base = pwcca_score(res, x)
        for _ in range(5):
            ay = _random_invertible(rng, 5)
            res2 = fit_cca(ViewPair(x, y @ ay), ridge=0.0)
            assert abs(pwcca_score(res2, x) - base) <= 1e-6

    def test_evaluate_matches_fit_on_train(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(300, 4))
        y = x @ rng.normal(size=(4, 3)) + rng.normal(size=(300, 3))
        res = fit_cca(ViewPair(x, y), ridge=0.0)
        fit_score = pwcca_score(res, x)
        rho_eval, eval_score = evaluate_cca(res, x, y)
        assert np.abs(rho_eval - res.rho).max() <= 1e-8
        assert abs(eval_score - fit_score) <= 1e-8


def _cluster_samples(rng, n_words, per_word, dim, sigma, scale=5.0):
    # separation matters: with one-hot targets over V words the population
    # correlation per direction is sqrt(c^2/V / (c^2/V + sigma^2))
    centroids = np.eye(n_words, dim) * scale
    samples = []
    for w in range(n_words):
        for i in range(per_word):
            span = WordSpan(f"u{w}_{i}", f"w{w:03d}", 0.0, 0.1)
            pooled = centroids[w] + sigma * rng.normal(size=dim)
            samples.append(SegmentSample(span=span, layer=0, pooled=pooled))
    return samples


class TestProtocol:
    def test_clustered_words_score_high(self):
        rng = np.random.default_rng(13)
        samples = _cluster_samples(rng, n_words=40, per_word=12, dim=40, sigma=0.1)
        table = build_onehot_table({s.word for s in samples})
        result = cca_protocol(samples, table, n_splits=5, seed=0)
        mean, lo, hi = result.test_stats
        assert mean >= 0.95
        assert lo <= mean <= hi

    def test_deterministic(self):
        rng = np.random.default_rng(14)
        samples = _cluster_samples(rng, n_words=10, per_word=10, dim=10, sigma=0.3)
        table = build_onehot_table({s.word for s in samples})
        a = cca_protocol(samples, table, n_splits=3, seed=5)
        b = cca_protocol(samples, table, n_splits=3, seed=5)
        assert [(s.ridge, s.val_pwcca, s.test_pwcca) for s in a.splits] == \
               [(s.ridge, s.val_pwcca, s.test_pwcca) for s in b.splits]

    def test_unstratified_words_warn_not_fail(self, caplog):
        rng = np.random.default_rng(15)
        samples = _cluster_samples(rng, n_words=12, per_word=12, dim=12, sigma=0.2)
        # add a rare word with fewer instances than the split count
        rare = [SegmentSample(span=WordSpan(f"r{i}", "rare", 0.0, 0.1), layer=0,
                              pooled=rng.normal(size=12)) for i in range(2)]
        table = build_onehot_table({s.word for s in samples + rare})
        result = cca_protocol(samples + rare, table, n_splits=3, seed=1)
        assert len(result.splits) == 3

    def test_words_missing_from_table_dropped(self):
        rng = np.random.default_rng(16)
        samples = _cluster_samples(rng, n_words=8, per_word=10, dim=8, sigma=0.2)
        table = build_onehot_table({s.word for s in samples if s.word != "w000"})
        result = cca_protocol(samples, table, n_splits=3, seed=2)
        assert result.n_dropped == 10
        assert result.n_samples == 70
