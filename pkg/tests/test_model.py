import numpy as np
import pytest

from twinuplift.model import (
    Hidden1Params,
    InteractionParams,
    active_nodes,
    construct_nn_from_interaction,
    forward,
    init_hidden1,
    init_interaction,
    interaction_forward,
    load_params,
    nn_forward,
    params_from_dict,
    params_to_dict,
    save_params,
    twin_forward,
)

SIGMOID_1 = 0.7310585786300049
SIGMOID_2 = 0.8807970779778823


def interaction_from_theta(theta0, theta):
    theta = np.asarray(theta, dtype=float)
    return InteractionParams(
        p=theta.size // 2, theta0=theta0, u=np.maximum(theta, 0), v=np.maximum(-theta, 0)
    )


class TestInteractionForward:
    def test_all_zero_gives_half(self):
        params = init_interaction(3)
        assert interaction_forward(params, np.ones(3), 1) == 0.5
        assert interaction_forward(params, -np.ones(3), 0) == 0.5

    def test_control_ignores_interaction_block(self):
        rng = np.random.default_rng(0)
        p = 4
        theta = rng.normal(size=2 * p + 1)
        base = interaction_from_theta(0.3, theta)
        changed = theta.copy()
        changed[p:] = rng.normal(size=p + 1)  # interaction block and treatment effect
        other = interaction_from_theta(0.3, changed)
        x = rng.normal(size=p)
        assert interaction_forward(base, x, 0) == interaction_forward(other, x, 0)

    def test_intercept_only(self):
        params = interaction_from_theta(1.0, np.zeros(5))
        assert interaction_forward(params, np.zeros(2), 1) == pytest.approx(SIGMOID_1, abs=1e-6)

    def test_dimension_mismatch(self):
        params = init_interaction(3)
        with pytest.raises(ValueError):
            interaction_forward(params, np.zeros(4), 1)


class TestNNForward:
    def test_zero_scaling_collapses_to_output_intercept(self):
        rng = np.random.default_rng(1)
        params = init_hidden1(3, 5, seed=2)
        params.a[:] = 0.0
        params.b[:] = 0.0
        params.b2 = 0.7
        want = 1 / (1 + np.exp(-0.7))
        for _ in range(5):
            assert nn_forward(params, rng.normal(size=3), rng.integers(0, 2)) == pytest.approx(
                want, abs=1e-15
            )

    def test_all_zero_weights(self):
        params = init_hidden1(2, 4, seed=3)
        params.w1u[:] = 0
        params.w1v[:] = 0
        params.w2u[:] = 0
        params.w2v[:] = 0
        assert nn_forward(params, np.ones(2), 1) == 0.5

    def test_single_node_composition(self):
        params = Hidden1Params(
            p=1,
            m=1,
            w1u=np.array([[1.0], [0.0]]),
            w1v=np.zeros((2, 1)),
            b1=np.zeros(1),
            a=np.ones(1),
            b=np.zeros(1),
            w2u=np.ones(1),
            w2v=np.zeros(1),
            b2=0.0,
        )
        assert nn_forward(params, np.array([2.0]), 0) == pytest.approx(SIGMOID_2, abs=1e-6)

    def test_pruned_node_contributes_exactly_zero(self):
        rng = np.random.default_rng(4)
        params = init_hidden1(4, 6, seed=5)
        params.w2u[2] = 50.0  # huge output weight on the node we prune
        params.a[2] = 0.0
        params.b[2] = 0.0
        ref = init_hidden1(4, 6, seed=5)
        ref.w2u[2] = 50.0
        ref.a[2] = 0.0
        ref.b[2] = 0.0
        ref.w1u[:, 2] = rng.normal(size=5)  # dead node's weights are irrelevant
        x = rng.normal(size=4)
        assert nn_forward(params, x, 1) == nn_forward(ref, x, 1)


class TestTwinForward:
    def test_zero_interaction_block_means_zero_uplift(self):
        rng = np.random.default_rng(6)
        p = 3
        theta = np.concatenate([rng.normal(size=p), np.zeros(p + 1)])
        params = interaction_from_theta(0.5, theta)
        for _ in range(10):
            out = twin_forward(params, rng.normal(size=p))
            assert out.uplift == 0.0

    def test_treatment_effect_sign_flip(self):
        p = 2
        theta = np.zeros(2 * p + 1)
        theta[-1] = 1.5
        pos = twin_forward(interaction_from_theta(0.0, theta), np.zeros(p))
        theta[-1] = -1.5
        neg = twin_forward(interaction_from_theta(0.0, theta), np.zeros(p))
        assert pos.uplift > 0 > neg.uplift
        assert pos.uplift == pytest.approx(-neg.uplift, abs=1e-15)

    def test_uplift_bounded(self):
        rng = np.random.default_rng(7)
        params = init_hidden1(5, 8, seed=8)
        params.w2u += rng.uniform(0, 3, 8)
        for _ in range(100):
            out = twin_forward(params, rng.normal(size=5))
            assert -1 < out.uplift < 1

    def test_mu_t_matches_direct_forward(self):
        rng = np.random.default_rng(9)
        params = init_hidden1(4, 6, seed=10)
        for _ in range(20):
            x = rng.normal(size=4)
            t = int(rng.integers(0, 2))
            out = twin_forward(params, x, t)
            assert out.mu_t == pytest.approx(forward(params, x, t), abs=1e-15)


class TestConstructiveEmbedding:
    def test_hand_trace_p1(self):
        nn = construct_nn_from_interaction(0.0, np.array([1.0, 1.0, 1.0]), c=1.0)
        got = nn_forward(nn, np.array([0.5]), 1)
        assert got == pytest.approx(1 / (1 + np.exp(-2.0)), abs=1e-15)

    def test_origin_control(self):
        rng = np.random.default_rng(11)
        theta = rng.normal(size=7)
        nn = construct_nn_from_interaction(0.4, theta, c=2.0)
        assert nn_forward(nn, np.zeros(3), 0) == pytest.approx(1 / (1 + np.exp(-0.4)), abs=1e-15)

    def test_equivalence_on_box(self):
        rng = np.random.default_rng(12)
        p, c = 5, 2.0
        for _ in range(1000):
            theta = rng.normal(size=2 * p + 1)
            theta0 = rng.normal()
            nn = construct_nn_from_interaction(theta0, theta, c)
            ip = interaction_from_theta(theta0, theta)
            x = rng.uniform(0, c, p)
            t = int(rng.integers(0, 2))
            assert abs(nn_forward(nn, x, t) - interaction_forward(ip, x, t)) < 1e-12

    # Outside [0, c]^p the two models genuinely differ (the ReLU gates no
    # longer reduce to x_k and t*x_k), so no equality is asserted there.

    def test_rejects_nonpositive_c(self):
        with pytest.raises(ValueError):
            construct_nn_from_interaction(0.0, np.zeros(3), c=0.0)


class TestActiveNodes:
    def test_all_pruned(self):
        params = init_hidden1(3, 7, seed=13)
        params.a[:] = 0
        params.b[:] = 0
        assert active_nodes(params) == 0

    def test_fresh_init_fully_active(self):
        assert active_nodes(init_hidden1(3, 7, seed=14)) == 7

    def test_partial(self):
        params = init_hidden1(3, 10, seed=15)
        for k in (2, 6):
            params.a[k] = 0
            params.b[k] = 0
        assert active_nodes(params) == 8

    def test_rejects_interaction(self):
        with pytest.raises(TypeError):
            active_nodes(init_interaction(3))


class TestSerialization:
    def test_roundtrip_interaction(self, tmp_path):
        rng = np.random.default_rng(16)
        params = interaction_from_theta(0.3, rng.normal(size=9))
        path = tmp_path / "model.json"
        save_params(params, path)
        back = load_params(path)
        assert isinstance(back, InteractionParams)
        np.testing.assert_array_equal(back.u, params.u)
        np.testing.assert_array_equal(back.v, params.v)
        assert back.theta0 == params.theta0

    def test_roundtrip_hidden1(self, tmp_path):
        params = init_hidden1(4, 6, seed=17)
        path = tmp_path / "model.json"
        save_params(params, path)
        back = load_params(path)
        assert isinstance(back, Hidden1Params)
        for name in ("w1u", "w1v", "b1", "a", "b", "w2u", "w2v"):
            np.testing.assert_array_equal(getattr(back, name), getattr(params, name))
        assert back.b2 == params.b2

    def test_version_check(self):
        doc = params_to_dict(init_interaction(2))
        doc["version"] = 99
        with pytest.raises(ValueError):
            params_from_dict(doc)
