import numpy as np
import pytest

from sfexcite import (
    ConfigurationError,
    Dataset,
    InitialState,
    NarxConfig,
    Region,
    build_regressors,
)


def test_narx_config_validation():
    assert NarxConfig(n_u=2, n_y=1, m=3).p == 9
    with pytest.raises(ConfigurationError):
        NarxConfig(n_u=0)
    with pytest.raises(ConfigurationError):
        NarxConfig(m=0)
    with pytest.raises(ConfigurationError):
        NarxConfig(T_s=0.0)


def test_region_contains_and_corners():
    r = Region(np.array([0.0, 1.0]), np.array([2.0, 3.0]))
    assert r.contains([0.0, 1.0])
    assert r.contains([2.0, 3.0])
    assert r.contains([1.0, 2.0])
    assert not r.contains([2.1, 2.0])
    with pytest.raises(ConfigurationError):
        Region(np.array([1.0]), np.array([1.0]))


def test_dataset_shape_checks():
    with pytest.raises(ConfigurationError):
        Dataset(np.zeros((3, 1)), np.zeros((2, 1)))
    d = Dataset(np.zeros((3, 1)), np.ones((3, 1)))
    assert len(d) == 3


def test_regressor_single_row_pairs_input_with_previous_output(narx):
    # one-step predictor input at step 1: current input, initial output
    data = Dataset(np.array([[0.4]]), np.array([[0.5]]))
    init = InitialState(np.array([0.0, 0.5]))  # (u(0), y(0))
    X = build_regressors(narx, data, init)
    assert X.shape == (1, 2)
    np.testing.assert_allclose(X[0], [0.4, 0.5])


def test_regressor_rows_shift_outputs_by_one(narx):
    data = Dataset(np.array([[0.1], [0.2], [0.3]]),
                   np.array([[0.7], [0.8], [0.9]]))
    init = InitialState(np.array([0.0, 0.5]))
    X = build_regressors(narx, data, init)
    expected = np.array([[0.1, 0.5], [0.2, 0.7], [0.3, 0.8]])
    np.testing.assert_allclose(X, expected)


def test_regressor_higher_order_layout():
    cfg = NarxConfig(n_u=1, n_y=1, m=2)
    data = Dataset(np.array([[1.0], [2.0], [3.0]]),
                   np.array([[10.0], [20.0], [30.0]]))
    # init: u lags (u(0), u(-1)) = (5, 6); y lags (y(0), y(-1)) = (50, 60)
    init = InitialState(np.array([5.0, 6.0, 50.0, 60.0]))
    X = build_regressors(cfg, data, init)
    np.testing.assert_allclose(X[0], [1.0, 5.0, 50.0, 60.0])
    np.testing.assert_allclose(X[1], [2.0, 1.0, 10.0, 50.0])
    np.testing.assert_allclose(X[2], [3.0, 2.0, 20.0, 10.0])


def test_regressor_multichannel_channel_major():
    cfg = NarxConfig(n_u=2, n_y=1, m=2)
    data = Dataset(np.array([[1.0, -1.0], [2.0, -2.0]]),
                   np.array([[10.0], [20.0]]))
    init = InitialState(np.zeros(cfg.p))
    X = build_regressors(cfg, data, init)
    # channel-major then lag-major: [u1(k), u1(k-1), u2(k), u2(k-1), y(k-1), y(k-2)]
    np.testing.assert_allclose(X[1], [2.0, 1.0, -2.0, -1.0, 10.0, 0.0])


def test_append_one_pair_appends_one_row(narx):
    rng = np.random.default_rng(3)
    init = InitialState(rng.random(2))
    u = rng.random((6, 1))
    y = rng.random((6, 1))
    full = build_regressors(narx, Dataset(u, y), init)
    head = build_regressors(narx, Dataset(u[:5], y[:5]), init)
    assert full.shape[0] == head.shape[0] + 1
    np.testing.assert_array_equal(full[:5], head)


def test_dimension_mismatch_raises(narx):
    data = Dataset(np.zeros((2, 2)), np.zeros((2, 1)))
    with pytest.raises(ConfigurationError):
        build_regressors(narx, data, InitialState(np.zeros(2)))
    good = Dataset(np.zeros((2, 1)), np.zeros((2, 1)))
    with pytest.raises(ConfigurationError):
        build_regressors(narx, good, InitialState(np.zeros(3)))


def test_dataset_csv_roundtrip(tmp_path, narx):
    d = Dataset(np.array([[0.25], [0.75]]), np.array([[0.1], [0.9]]))
    path = tmp_path / "data.csv"
    d.to_csv(path)
    back = Dataset.from_csv(path, n_u=1, n_y=1)
    np.testing.assert_array_equal(back.inputs, d.inputs)
    np.testing.assert_array_equal(back.outputs, d.outputs)
