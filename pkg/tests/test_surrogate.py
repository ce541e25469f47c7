import numpy as np
import pytest

from sfexcite import (
    ConfigurationError,
    Dataset,
    InitialState,
    NarxConfig,
    Region,
    hammerstein_plant,
    lolimot_fit,
    lolimot_update,
    lti_from_time_constant,
    rollout,
    rollout_jacobian,
    simulate,
)
from sfexcite.surrogate import LagState, lolimot_fit_xy

from conftest import central_difference


# -- fixed LTI surrogate ----------------------------------------------------

def test_lti_discretization_values():
    m = lti_from_time_constant(T=5.0, K=1.0, T_s=1.0)
    assert m.a == pytest.approx(0.8, abs=1e-15)
    assert m.b == pytest.approx(0.2, abs=1e-15)
    m2 = lti_from_time_constant(T=5.0, K=2.0, T_s=1.0)
    assert m2.b == pytest.approx(0.4, abs=1e-15)
    assert m2.static_gain == pytest.approx(2.0, abs=1e-12)


def test_lti_rejects_coarse_sampling():
    with pytest.raises(ConfigurationError):
        lti_from_time_constant(T=1.0, K=1.0, T_s=1.0)
    with pytest.raises(ConfigurationError):
        lti_from_time_constant(T=1.0, K=1.0, T_s=2.0)


def test_lti_step_response_closed_form(lti):
    # unit step from rest: y(k) = K (1 - a^k)
    init = InitialState(np.zeros(2))
    K = lti.static_gain
    y = 0.0
    for k in range(1, 101):
        y = lti.predict(np.array([1.0, y]))[0]
        assert abs(y - K * (1.0 - lti.a ** k)) < 1e-12


def test_rollout_example_rows(lti):
    init = InitialState(np.zeros(2))
    rows = rollout(lti, None, np.array([[1.0], [1.0]]), init)
    np.testing.assert_allclose(rows, [[1.0, 0.0], [1.0, 0.2]], atol=1e-15)


def test_rollout_includes_committed_rows(lti):
    init = InitialState(np.zeros(2))
    committed = Dataset(np.array([[1.0]]), np.array([[0.2]]))
    rows = rollout(lti, committed, np.array([[0.5]]), init)
    np.testing.assert_allclose(rows, [[1.0, 0.0], [0.5, 0.2]], atol=1e-15)


def test_lti_rollout_jacobian_closed_form(lti):
    # d row_t[1] / d u_s = b a^(t-s-1) for s < t; d row_t[0] / d u_t = 1
    init = InitialState(np.zeros(2))
    L = 6
    cand = np.full((L, 1), 0.3)
    jac = rollout_jacobian(lti, None, cand, init)
    assert jac.shape == (L, 2, L, 1)
    for t in range(L):
        for s in range(L):
            expect_u = 1.0 if s == t else 0.0
            assert jac[t, 0, s, 0] == pytest.approx(expect_u, abs=1e-15)
            if s < t:
                expect_y = lti.b * lti.a ** (t - s - 1)
            else:
                expect_y = 0.0
            assert jac[t, 1, s, 0] == pytest.approx(expect_y, abs=1e-13)


def test_rollout_jacobian_matches_finite_differences_lti(lti):
    init = InitialState(np.array([0.0, 0.4]))
    rng = np.random.default_rng(7)
    cand = rng.random((5, 1))
    jac = rollout_jacobian(lti, None, cand, init)

    for t in range(5):
        for comp in range(2):
            def f(c, t=t, comp=comp):
                return rollout(lti, None, c, init)[t, comp]
            fd = central_difference(f, cand)
            np.testing.assert_allclose(jac[t, comp], fd, rtol=1e-6, atol=1e-9)


# -- LOLIMOT ----------------------------------------------------------------

def _affine_dataset(n=60, seed=0):
    rng = np.random.default_rng(seed)
    u = rng.random((n, 1))
    y = np.empty((n, 1))
    y_prev = 0.5
    for k in range(n):
        y[k, 0] = 1.0 + 2.0 * u[k, 0] + 0.0 * y_prev
        y_prev = y[k, 0]
    return Dataset(u, y)


def test_single_model_matches_ordinary_least_squares():
    # noise-free affine data: one local model must recover it exactly
    data = _affine_dataset()
    cfg = NarxConfig()
    region = Region(np.array([0.0, -5.0]), np.array([1.0, 5.0]))
    model = lolimot_fit(data, cfg, max_models=1, region=region,
                        init=InitialState(np.array([0.0, 0.5])))
    assert model.n_models == 1
    theta = model.params[0, 0]
    np.testing.assert_allclose(theta, [1.0, 2.0, 0.0], atol=1e-9)
    assert abs(model.predict(np.array([0.3, 0.7]))[0] - 1.6) < 1e-9


def test_single_model_is_globally_affine():
    data = _affine_dataset(seed=2)
    cfg = NarxConfig()
    model = lolimot_fit(data, cfg, max_models=1,
                        init=InitialState(np.array([0.0, 0.5])))
    rng = np.random.default_rng(5)
    pts = rng.random((50, 2))
    pred = model.predict_batch(pts)
    # affine in both coordinates regardless of validity shape
    np.testing.assert_allclose(pred[:, 0], 1.0 + 2.0 * pts[:, 0], atol=1e-8)


def test_validity_weights_sum_to_one():
    data = _hammerstein_data(300, seed=1)
    model = _fit_hammerstein(data, max_models=8)
    rng = np.random.default_rng(9)
    pts = rng.random((200, 2))
    w = model.validity(pts)
    assert np.all(w >= 0)
    np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-12)


def _hammerstein_data(n, seed):
    plant = hammerstein_plant()
    rng = np.random.default_rng(seed)
    return simulate(plant, rng.random((n, 1)))


def _fit_hammerstein(data, max_models, full_gradient=False):
    cfg = NarxConfig()
    region = Region.unit(2)
    return lolimot_fit(data, cfg, max_models=max_models, region=region,
                       init=InitialState(np.array([0.0, 0.5])),
                       full_gradient=full_gradient)


def _rmse(model, data):
    from sfexcite import build_regressors
    X = build_regressors(model.config, data, InitialState(np.array([0.0, 0.5])))
    resid = data.outputs - model.predict_batch(X)
    return float(np.sqrt(np.mean(resid ** 2)))


def test_more_models_do_not_hurt_training_error():
    data = _hammerstein_data(400, seed=3)
    errors = [_rmse(_fit_hammerstein(data, m), data) for m in (1, 2, 4, 8)]
    for worse, better in zip(errors, errors[1:]):
        assert better <= worse + 1e-12
    # the split nonlinearity is genuinely easier with more partitions
    assert errors[-1] < 0.5 * errors[0]


def test_fit_requires_enough_samples():
    cfg = NarxConfig()
    data = Dataset(np.array([[0.1]]), np.array([[0.2]]))
    with pytest.raises(ConfigurationError):
        lolimot_fit(data, cfg, init=InitialState(np.zeros(2)))


def test_fit_is_deterministic():
    data = _hammerstein_data(200, seed=6)
    a = _fit_hammerstein(data, max_models=6)
    b = _fit_hammerstein(data, max_models=6)
    np.testing.assert_array_equal(a.params, b.params)
    np.testing.assert_array_equal(a.lowers, b.lowers)


def test_update_refits_on_all_data():
    base = _hammerstein_data(80, seed=8)
    model = _fit_hammerstein(base, max_models=6)
    plant = hammerstein_plant()
    rng = np.random.default_rng(13)
    more = simulate(plant, rng.random((220, 1)))
    combined = Dataset(np.vstack([base.inputs, more.inputs]),
                       np.vstack([base.outputs, more.outputs]))
    updated = lolimot_update(model, combined,
                             init=InitialState(np.array([0.0, 0.5])))
    direct = _fit_hammerstein(combined, max_models=6)
    np.testing.assert_array_equal(updated.params, direct.params)
    np.testing.assert_array_equal(updated.lowers, direct.lowers)


def test_update_rejects_empty_data():
    model = _fit_hammerstein(_hammerstein_data(50, seed=1), max_models=2)
    with pytest.raises(ConfigurationError):
        lolimot_update(model, Dataset(np.empty((0, 1)), np.empty((0, 1))))


def test_lolimot_jacobian_matches_finite_differences():
    data = _hammerstein_data(250, seed=4)
    model = _fit_hammerstein(data, max_models=6, full_gradient=True)
    rng = np.random.default_rng(21)
    checked = 0
    for _ in range(40):
        x = 0.05 + 0.9 * rng.random(2)
        jac = model.jacobian(x)

        def f(xv):
            return model.predict(xv)[0]

        fd = central_difference(f, x)
        denom = max(np.linalg.norm(fd), 1e-8)
        assert np.linalg.norm(jac[0] - fd) / denom < 1e-5
        checked += 1
    assert checked == 40


def test_lolimot_rollout_jacobian_matches_finite_differences():
    data = _hammerstein_data(250, seed=4)
    model = _fit_hammerstein(data, max_models=6, full_gradient=True)
    init = InitialState(np.array([0.2, 0.5]))
    rng = np.random.default_rng(30)
    cand = 0.1 + 0.8 * rng.random((4, 1))
    jac = rollout_jacobian(model, None, cand, init)
    for t in range(4):
        for comp in range(2):
            def f(c, t=t, comp=comp):
                return rollout(model, None, c, init)[t, comp]
            fd = central_difference(f, cand)
            denom = max(np.linalg.norm(fd), 1e-8)
            assert np.linalg.norm(jac[t, comp] - fd) / denom < 1e-5


def test_lolimot_fit_xy_rejects_region_mismatch():
    X = np.random.default_rng(0).random((20, 2))
    Y = X[:, :1]
    with pytest.raises(ConfigurationError):
        lolimot_fit_xy(X, Y, Region.unit(3), NarxConfig())


def test_lag_state_row_and_advance():
    cfg = NarxConfig(n_u=1, n_y=1, m=2)
    init = InitialState(np.array([1.0, 2.0, 10.0, 20.0]))
    st = LagState(cfg, init)
    np.testing.assert_allclose(st.row(np.array([3.0])), [3.0, 1.0, 10.0, 20.0])
    st.advance(np.array([3.0]), np.array([30.0]))
    np.testing.assert_allclose(st.row(np.array([4.0])), [4.0, 3.0, 30.0, 10.0])
