import math

import numpy as np
import pytest

from twinuplift.dgp import (
    SCENARIOS,
    Scenario,
    eval_f,
    eval_f_matrix,
    generate_covariates,
    generate_dataset,
    std_normal_cdf,
    true_uplift,
)

# Phi(1), frozen from mpmath.ncdf(1) to 16 digits
PHI_1 = 0.8413447460685429


def vec(p=9, **named):
    """Covariate vector with 1-based assignments, e.g. vec(x1=2.0)."""
    x = np.zeros(p)
    for key, val in named.items():
        x[int(key[1:]) - 1] = val
    return x


class TestEvalF:
    def test_f1_is_zero(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            assert eval_f(1, rng.normal(size=9)) == 0.0

    def test_f3_root(self):
        assert eval_f(3, vec(x1=2.0)) == 0.0

    def test_f5_sum(self):
        x = vec(x1=1, x3=1, x5=1, x7=1, x8=1, x9=1)
        assert eval_f(5, x) == pytest.approx(4.0)

    def test_f4_all_ones(self):
        # only the x2*x4*x6 term survives
        assert eval_f(4, vec(x2=1, x4=1, x6=1)) == pytest.approx(1.0)

    def test_f8_is_scaled_sum_of_f4_f5(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(1000, 12))
        x[:, 1::2] = rng.integers(0, 2, size=x[:, 1::2].shape)
        lhs = eval_f_matrix(8, x)
        rhs = (eval_f_matrix(4, x) + eval_f_matrix(5, x)) / math.sqrt(2)
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12)

    def test_rejects_bad_id(self):
        with pytest.raises(ValueError):
            eval_f(0, vec())
        with pytest.raises(ValueError):
            eval_f(9, vec())

    def test_rejects_short_vector_for_high_ids(self):
        with pytest.raises(ValueError):
            eval_f(5, np.zeros(5))
        # low ids only read x1
        assert eval_f(3, np.zeros(1)) == -4.0


class TestNormalCdf:
    def test_center(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_tail(self):
        assert std_normal_cdf(8.0) > 1 - 1e-15

    def test_one(self):
        assert std_normal_cdf(1.0) == pytest.approx(PHI_1, abs=1e-6)

    def test_symmetry(self):
        z = np.linspace(-6, 6, 101)
        np.testing.assert_allclose(std_normal_cdf(z) + std_normal_cdf(-z), 1.0, atol=1e-15)

    def test_monotone(self):
        z = np.linspace(-10, 10, 2001)
        assert np.all(np.diff(std_normal_cdf(z)) >= 0)

    def test_against_mpmath(self):
        mp = pytest.importorskip("mpmath")
        for z in np.linspace(-8, 8, 33):
            assert abs(std_normal_cdf(z) - float(mp.ncdf(z))) < 1e-12


class TestTrueUplift:
    def test_zero_tau(self):
        assert true_uplift(0.0, 0.0, 1.0) == 0.0

    def test_large_tau_limit(self):
        assert true_uplift(0.0, 50.0, 1.0) == pytest.approx(0.5, abs=1e-12)

    def test_unit(self):
        assert true_uplift(0.0, 1.0, 1.0) == pytest.approx(PHI_1 - 0.5, abs=1e-6)

    def test_sign_matches_tau(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            mu, tau, sigma = rng.uniform(-1, 1), rng.normal(), rng.uniform(0.5, 3)
            assert np.sign(true_uplift(mu, tau, sigma)) == np.sign(tau)

    def test_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            true_uplift(0.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            true_uplift(0.0, 1.0, -1.0)


class TestScenarioTable:
    def test_rows(self):
        rows = {
            1: (10_000, 200, 7, 4, 0.5),
            2: (20_000, 100, 3, 5, 1.0),
            3: (20_000, 100, 1, 6, 1.0),
            4: (20_000, 100, 2, 7, 2.0),
            5: (20_000, 100, 6, 8, 4.0),
        }
        for sid, (n, p, mu, tau, sigma) in rows.items():
            s = SCENARIOS[sid]
            assert (s.n, s.p, s.mu_fn, s.tau_fn, s.sigma) == (n, p, mu, tau, sigma)

    def test_invalid_scenarios_rejected(self):
        with pytest.raises(ValueError):
            Scenario(9, n=0, p=9, mu_fn=1, tau_fn=1, sigma=1.0)
        with pytest.raises(ValueError):
            Scenario(9, n=10, p=5, mu_fn=1, tau_fn=1, sigma=1.0)
        with pytest.raises(ValueError):
            Scenario(9, n=10, p=9, mu_fn=1, tau_fn=1, sigma=0.0)


class TestGenerateCovariates:
    def test_odd_columns_gaussian_mean(self):
        x = generate_covariates(10_000, 2, seed=5)
        assert abs(x[:, 0].mean()) < 4 / math.sqrt(10_000)
        assert 0.8 < x[:, 0].std() < 1.2

    def test_even_columns_binary(self):
        x = generate_covariates(10_000, 2, seed=5)
        assert set(np.unique(x[:, 1])) == {0.0, 1.0}
        assert abs(x[:, 1].mean() - 0.5) < 4 * math.sqrt(0.25 / 10_000)

    def test_deterministic(self):
        a = generate_covariates(500, 11, seed=9)
        b = generate_covariates(500, 11, seed=9)
        assert np.array_equal(a, b)

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            generate_covariates(0, 3, seed=1)


class TestGenerateDataset:
    def test_treatment_balance(self):
        ds = generate_dataset(SCENARIOS[2], seed=3)
        assert abs(ds.t.mean() - 0.5) < 4 * math.sqrt(0.25 / ds.n)

    def test_null_treatment_effect(self):
        scn = Scenario(9, n=20_000, p=9, mu_fn=3, tau_fn=1, sigma=1.0)
        ds = generate_dataset(scn, seed=4)
        diff = ds.y[ds.t == 1].mean() - ds.y[ds.t == 0].mean()
        assert abs(diff) < 4 * math.sqrt(1.0 / ds.n)

    def test_probit_outcome_rate(self):
        # empirical P(Y=1) must match the probit formula averaged over rows
        from twinuplift.dgp import eval_f_matrix, std_normal_cdf

        ds = generate_dataset(SCENARIOS[2], seed=6)
        scn = SCENARIOS[2]
        mu = eval_f_matrix(scn.mu_fn, ds.x)
        tau = eval_f_matrix(scn.tau_fn, ds.x)
        expected = std_normal_cdf((mu + ds.t * tau) / scn.sigma).mean()
        assert abs(ds.y.mean() - expected) < 4 * math.sqrt(0.25 / ds.n)

    def test_u_true_recomputes_exactly(self):
        scn = SCENARIOS[2]
        ds = generate_dataset(scn, seed=7)
        mu = eval_f_matrix(scn.mu_fn, ds.x)
        tau = eval_f_matrix(scn.tau_fn, ds.x)
        np.testing.assert_array_equal(ds.u_true, true_uplift(mu, tau, scn.sigma))

    def test_u_true_open_interval(self):
        ds = generate_dataset(SCENARIOS[3], seed=8)
        assert np.all(np.abs(ds.u_true) < 1)

    def test_scenario1_nonnegative_uplift(self):
        # tau = f4 is positive pointwise on binary inputs, so u_true >= 0
        ds = generate_dataset(SCENARIOS[1], seed=9)
        assert np.all(ds.u_true >= 0)

    def test_deterministic(self):
        a = generate_dataset(SCENARIOS[3], seed=10)
        b = generate_dataset(SCENARIOS[3], seed=10)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.t, b.t)
        assert np.array_equal(a.y, b.y)
        assert np.array_equal(a.u_true, b.u_true)

    def test_dataset_immutable(self):
        ds = generate_dataset(Scenario(9, n=50, p=9, mu_fn=1, tau_fn=1, sigma=1.0), seed=1)
        with pytest.raises(ValueError):
            ds.x[0, 0] = 99.0
