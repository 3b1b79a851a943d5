import numpy as np
import pytest
from numpy.testing import assert_allclose

from nystromcov.error_analytics import (
    ErrorReport,
    GroundTruthModel,
    expected_nystrom,
    monte_carlo_verify,
    mse_lower_bound,
    nystrom_bias,
    nystrom_mse,
    sample_mse,
)


def random_pd_model(rng, p, n, scale=0.5):
    a = rng.standard_normal((p, p))
    return GroundTruthModel(sigma=a @ a.T + scale * np.eye(p), n=n)


def leading_block_oracle(sigma, n, k):
    """Expected estimate for the leading subset {0..k-1}, straight from the
    formula, used to cross-check the permutation handling."""
    p = sigma.shape[0]
    sig_i = sigma[:k, :k]
    sig_ij = sigma[:k, k:]
    sig_j = sigma[k:, k:]
    out = sigma.copy()
    out[k:, k:] = (k / n) * sig_j + ((n - k) / n) * sig_ij.T @ np.linalg.inv(sig_i) @ sig_ij
    return out


# ---------------------------------------------------------------------------
# expected value


def test_expected_identity_model():
    model = GroundTruthModel(sigma=np.eye(4), n=8)
    out = expected_nystrom(model, [0, 1])
    ref = np.diag([1.0, 1.0, 0.25, 0.25])
    assert_allclose(out, ref, atol=1e-14)


def test_expected_subset_size_equal_to_samples():
    rng = np.random.default_rng(2)
    model = random_pd_model(rng, 4, 3)
    out = expected_nystrom(model, [0, 1, 2])
    assert_allclose(out, model.sigma, atol=1e-12)


def test_expected_unsorted_subset_matches_permutation_oracle():
    rng = np.random.default_rng(3)
    model = random_pd_model(rng, 6, 10)
    idx = [4, 1, 3]
    perm = np.array(idx + [0, 2, 5])
    permuted = model.sigma[np.ix_(perm, perm)]
    ref_perm = leading_block_oracle(permuted, 10, 3)
    ref = np.empty_like(ref_perm)
    ref[np.ix_(perm, perm)] = ref_perm
    assert_allclose(expected_nystrom(model, idx), ref, atol=1e-10)


def test_expected_matches_independent_monte_carlo():
    # naive per-trial loop with an explicit pseudoinverse projector
    rng = np.random.default_rng(5)
    model = random_pd_model(rng, 4, 6)
    idx = np.array([2, 0])
    root = np.linalg.cholesky(model.sigma)
    trials = 20_000
    acc = np.zeros((4, 4))
    acc2 = np.zeros((4, 4))
    for _ in range(trials):
        x = root @ rng.standard_normal((4, 6))
        y = x[idx]
        proj = y.T @ np.linalg.pinv(y @ y.T) @ y
        est = x @ proj @ x.T / 6
        acc += est
        acc2 += est**2
    mean = acc / trials
    se = np.sqrt((acc2 / trials - mean**2) / (trials - 1))
    assert np.all(np.abs(mean - expected_nystrom(model, idx)) <= 4 * se + 1e-12)


def test_expected_rejects_singular_principal_block():
    sigma = np.diag([0.0, 1.0, 2.0])
    model = GroundTruthModel(sigma=sigma, n=5)
    with pytest.raises(ValueError):
        expected_nystrom(model, [0])


# ---------------------------------------------------------------------------
# bias


def test_bias_identity_model():
    model = GroundTruthModel(sigma=np.eye(4), n=8)
    b = nystrom_bias(model, [0, 1])
    ref = np.zeros((4, 4))
    ref[2:, 2:] = (6 / 8) * np.eye(2)
    assert_allclose(b, ref, atol=1e-14)


def test_bias_vanishes_on_low_rank_truth():
    # rank-2 covariance whose selected block is invertible: unbiased
    rng = np.random.default_rng(7)
    a = rng.standard_normal((5, 2))
    model = GroundTruthModel(sigma=a @ a.T, n=9)
    b = nystrom_bias(model, [0, 1])
    assert_allclose(b, np.zeros((5, 5)), atol=1e-10)


def test_bias_is_truth_minus_expected():
    rng = np.random.default_rng(9)
    model = random_pd_model(rng, 7, 12)
    idx = [6, 0, 3]
    assert_allclose(
        nystrom_bias(model, idx),
        model.sigma - expected_nystrom(model, idx),
        atol=1e-12,
    )


def test_bias_block_is_psd():
    rng = np.random.default_rng(11)
    model = random_pd_model(rng, 6, 8)
    b = nystrom_bias(model, [1, 4])
    assert np.linalg.eigvalsh(b).min() >= -1e-10


# ---------------------------------------------------------------------------
# scalar error formulas


def test_sample_mse_identity():
    model = GroundTruthModel(sigma=np.eye(4), n=8)
    assert_allclose(sample_mse(model), (16 + 4) / 8, atol=1e-14)


def test_sample_mse_diagonal_hand_value():
    model = GroundTruthModel(sigma=np.diag([1.0, 2.0]), n=4)
    assert_allclose(sample_mse(model), 3.5, atol=1e-14)


def test_sample_mse_quadratic_scaling():
    rng = np.random.default_rng(13)
    sigma = random_pd_model(rng, 5, 7).sigma
    base = sample_mse(GroundTruthModel(sigma=sigma, n=7))
    scaled = sample_mse(GroundTruthModel(sigma=3.0 * sigma, n=7))
    assert_allclose(scaled, 9.0 * base, rtol=1e-12)


def test_nystrom_mse_identity_hand_value():
    model = GroundTruthModel(sigma=np.eye(4), n=8)
    assert_allclose(nystrom_mse(model, [0, 1]), 3.0625, atol=1e-12)


def test_nystrom_mse_low_rank_truth_equals_sample_mse():
    rng = np.random.default_rng(17)
    a = rng.standard_normal((5, 2))
    model = GroundTruthModel(sigma=a @ a.T, n=9)
    assert_allclose(nystrom_mse(model, [0, 1]), sample_mse(model), rtol=1e-10)


def test_nystrom_mse_internal_forms_agree_on_random_models():
    # the op cross-checks two algebraic forms and raises on mismatch
    rng = np.random.default_rng(19)
    for _ in range(1000):
        p = int(rng.integers(2, 13))
        n = int(rng.integers(2, 16))
        k = int(rng.integers(1, min(p, n) + 1))
        model = random_pd_model(rng, p, n)
        idx = rng.permutation(p)[:k]
        nystrom_mse(model, idx)


def test_lower_bound_identity_equality():
    model = GroundTruthModel(sigma=np.eye(6), n=9)
    idx = [0, 1, 2]
    assert_allclose(mse_lower_bound(model, idx), nystrom_mse(model, idx), atol=1e-12)


def test_lower_bound_dominated_by_mse():
    rng = np.random.default_rng(23)
    for _ in range(200):
        p = int(rng.integers(2, 10))
        n = int(rng.integers(2, 14))
        k = int(rng.integers(1, min(p, n) + 1))
        model = random_pd_model(rng, p, n)
        idx = rng.permutation(p)[:k]
        assert mse_lower_bound(model, idx) <= nystrom_mse(model, idx) + 1e-10


def test_lower_bound_degenerates_at_n_equal_p_plus_one():
    rng = np.random.default_rng(29)
    model = random_pd_model(rng, 4, 5)
    assert_allclose(mse_lower_bound(model, [0, 2]), sample_mse(model), rtol=1e-12)


def test_identity_dominance_for_small_samples():
    # strict improvement over the sample estimator whenever n <= p
    for p, n in [(8, 6), (8, 8), (12, 10)]:
        model = GroundTruthModel(sigma=np.eye(p), n=n)
        for k in range(1, n):
            assert nystrom_mse(model, list(range(k))) < sample_mse(model)


# ---------------------------------------------------------------------------
# monte_carlo_verify


def test_monte_carlo_identity_case_matches_closed_forms():
    model = GroundTruthModel(sigma=np.eye(4), n=8)
    idx = [0, 1]
    report = monte_carlo_verify(model, idx, trials=30_000, seed=0)
    assert isinstance(report, ErrorReport)
    assert report.trials == 30_000
    assert_allclose(report.analytic_mse, 3.0625, atol=1e-12)
    assert abs(report.empirical_mse - report.analytic_mse) <= 4 * report.standard_error
    dev = np.abs(report.empirical_bias - report.analytic_bias)
    assert np.all(dev <= 4 * report.bias_standard_error + 1e-12)


def test_monte_carlo_deterministic():
    rng = np.random.default_rng(31)
    model = random_pd_model(rng, 4, 7)
    a = monte_carlo_verify(model, [1, 3], trials=500, seed=42)
    b = monte_carlo_verify(model, [1, 3], trials=500, seed=42)
    assert_allclose(a.empirical_mse, b.empirical_mse, rtol=0)
    assert_allclose(a.empirical_bias, b.empirical_bias, rtol=0)


def test_monte_carlo_rejects_oversized_subset():
    model = GroundTruthModel(sigma=np.eye(6), n=3)
    with pytest.raises(ValueError):
        monte_carlo_verify(model, [0, 1, 2, 3], trials=200, seed=0)


def test_monte_carlo_unbiased_when_subset_saturates_samples():
    model = GroundTruthModel(sigma=np.eye(5) * 2.0, n=4)
    report = monte_carlo_verify(model, [0, 1, 2, 3], trials=5000, seed=3)
    assert_allclose(report.analytic_bias, np.zeros((5, 5)), atol=1e-12)
    dev = np.abs(report.empirical_bias)
    assert np.all(dev <= 4 * report.bias_standard_error + 1e-12)


def test_monte_carlo_validates_inputs():
    model = GroundTruthModel(sigma=np.eye(3), n=5)
    with pytest.raises(ValueError):
        monte_carlo_verify(model, [0], trials=50, seed=0)
    rank1 = GroundTruthModel(sigma=np.outer([1.0, 2.0], [1.0, 2.0]), n=5)
    with pytest.raises(ValueError):
        monte_carlo_verify(rank1, [0], trials=200, seed=0)


# ---------------------------------------------------------------------------
# model validation


def test_model_rejects_asymmetric_or_indefinite_sigma():
    with pytest.raises(ValueError):
        GroundTruthModel(sigma=np.array([[1.0, 2.0], [0.0, 1.0]]), n=4)
    with pytest.raises(ValueError):
        GroundTruthModel(sigma=np.array([[1.0, 0.0], [0.0, -1.0]]), n=4)
    with pytest.raises(ValueError):
        GroundTruthModel(sigma=np.eye(3), n=0)


def test_model_exposes_sizes():
    model = GroundTruthModel(sigma=np.eye(3), n=5, k=2)
    assert model.p == 3
    assert model.n == 5
    assert model.k == 2
    with pytest.raises(ValueError):
        expected_nystrom(model, [0, 1, 2])  # disagrees with declared k
