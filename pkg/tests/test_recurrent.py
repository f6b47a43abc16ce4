import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import expit

from lsm_ml.errors import InsufficientData, LsmError, ShapeMismatch
from lsm_ml.recurrent import (
    Adam, GruParams, LstmParams, NetworkConfig, RecurrentRegressor, TrainingHistory, backprop_layer,
    gru_backward, gru_forward, gru_step, lstm_backward, lstm_forward, lstm_step, make_windows, run_layer,
    split_indices, step_flops, train,
)

FD_EPS = 1e-5
TOL = 1e-4


def random_params(cls, n_in, n_h, seed):
    rng = np.random.default_rng(seed)
    p = cls.zeros(n_in, n_h)
    for name, arr in p.arrays().items():
        arr[...] = rng.normal(scale=0.6, size=arr.shape)
    return p


def rel_err(a, b):
    """Largest elementwise relative error, with a floor for near-zero entries."""
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), 1e-6)))


def numeric_grad(loss, arr):
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = arr[idx]
        arr[idx] = old + FD_EPS
        up = loss()
        arr[idx] = old - FD_EPS
        down = loss()
        arr[idx] = old
        g[idx] = (up - down) / (2 * FD_EPS)
    return g


# ----------------------------------------------------------------------------- identities

def test_zero_gru_halves_state():
    p = GruParams.zeros(3, 4)
    h_prev = np.array([0.3, -1.7, 2.0, 0.0])
    assert np.array_equal(gru_step(p, np.array([1.0, -2.0, 5.0]), h_prev), 0.5 * h_prev)


def test_zero_lstm_halves_cell():
    p = LstmParams.zeros(2, 3)
    c_prev = np.array([1.2, -0.4, 3.0])
    h, c = lstm_step(p, np.array([0.7, 9.0]), np.array([0.1, 0.2, 0.3]), c_prev)
    assert np.array_equal(c, 0.5 * c_prev)
    assert np.array_equal(h, 0.5 * np.tanh(0.5 * c_prev))


def test_lstm_forget_saturation_keeps_cell():
    p = LstmParams.zeros(2, 3)
    p.b_f[...] = 50.0
    c_prev = np.array([0.9, -2.0, 0.25])
    _, c = lstm_step(p, np.array([1.0, -1.0]), np.zeros(3), c_prev)
    assert np.max(np.abs(c - c_prev)) <= 1e-6


@settings(max_examples=50)
@given(st.integers(0, 10**6))
def test_gates_strictly_inside_unit_interval(seed):
    rng = np.random.default_rng(seed)
    lp = random_params(LstmParams, 3, 4, seed)
    x, h, c = rng.normal(size=(5, 3)), rng.normal(size=(5, 4)), rng.normal(size=(5, 4))
    *_, (_, _, _, i, f, o, g, _) = lstm_forward(lp, x, h, c)
    for gate in (i, f, o):
        assert np.all((gate > 0) & (gate < 1))
    assert np.all(np.abs(g) < 1)
    gp = random_params(GruParams, 3, 4, seed)
    _, (_, _, z, r, _, ht) = gru_forward(gp, x, h)
    assert np.all((z > 0) & (z < 1)) and np.all((r > 0) & (r < 1))
    assert np.all(np.abs(ht) < 1)


@settings(max_examples=50)
@given(st.integers(0, 10**6))
def test_gru_bounded_state(seed):
    rng = np.random.default_rng(seed)
    p = random_params(GruParams, 2, 5, seed)
    p.W_hx *= 5
    h = rng.uniform(-1, 1, size=(8, 5))
    for _ in range(4):
        h = gru_step(p, rng.normal(scale=3, size=(8, 2)), h)
        assert np.all(np.abs(h) <= 1)


def test_gate_formula_by_hand():
    p = random_params(LstmParams, 2, 2, 7)
    x, h, c = np.array([0.5, -0.3]), np.array([0.2, 0.1]), np.array([-0.4, 0.8])
    i = expit(p.W_ix @ x + p.W_ih @ h + p.b_i)
    f = expit(p.W_fx @ x + p.W_fh @ h + p.b_f)
    o = expit(p.W_ox @ x + p.W_oh @ h + p.b_o)
    g = np.tanh(p.W_cx @ x + p.W_ch @ h + p.b_c)
    h1, c1 = lstm_step(p, x, h, c)
    assert np.allclose(c1, f * c + i * g, rtol=0, atol=1e-15)
    assert np.allclose(h1, o * np.tanh(f * c + i * g), rtol=0, atol=1e-15)


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        lstm_step(LstmParams.zeros(2, 3), np.zeros(3), np.zeros(3), np.zeros(3))
    with pytest.raises(ShapeMismatch):
        gru_step(GruParams.zeros(2, 3), np.zeros(2), np.zeros(4))
    with pytest.raises(ShapeMismatch):
        GruParams(**{**GruParams.zeros(2, 3).arrays(), "b_r": np.zeros(2)})
    model = RecurrentRegressor(NetworkConfig(), 2)
    with pytest.raises(ShapeMismatch):
        model.predict(np.zeros((4, 3)))


# ----------------------------------------------------------------------------- gradients

def test_lstm_step_gradient_check():
    rng = np.random.default_rng(1)
    p = random_params(LstmParams, 2, 3, 11)
    x, h0, c0 = rng.normal(size=(4, 2)), rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
    th, tc = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))

    def loss():
        h, c = lstm_step(p, x, h0, c0)
        return float(np.mean((h - th) ** 2) + np.mean((c - tc) ** 2))

    h, c, cache = lstm_forward(p, x, h0, c0)
    grads = p.zeros_like()
    dx, dh0, dc0 = lstm_backward(p, cache, 2 * (h - th) / h.size, 2 * (c - tc) / c.size, grads)
    for name, arr in p.arrays().items():
        assert rel_err(getattr(grads, name), numeric_grad(loss, arr)) < TOL, name
    assert rel_err(dx, numeric_grad(loss, x)) < TOL
    assert rel_err(dh0, numeric_grad(loss, h0)) < TOL
    assert rel_err(dc0, numeric_grad(loss, c0)) < TOL


def test_gru_step_gradient_check():
    rng = np.random.default_rng(2)
    p = random_params(GruParams, 2, 3, 12)
    x, h0, th = rng.normal(size=(4, 2)), rng.normal(size=(4, 3)), rng.normal(size=(4, 3))

    def loss():
        return float(np.mean((gru_step(p, x, h0) - th) ** 2))

    h, cache = gru_forward(p, x, h0)
    grads = p.zeros_like()
    dx, dh0 = gru_backward(p, cache, 2 * (h - th) / h.size, grads)
    for name, arr in p.arrays().items():
        assert rel_err(getattr(grads, name), numeric_grad(loss, arr)) < TOL, name
    assert rel_err(dx, numeric_grad(loss, x)) < TOL
    assert rel_err(dh0, numeric_grad(loss, h0)) < TOL


@pytest.mark.parametrize("kind", ["lstm", "gru"])
@pytest.mark.parametrize("T", [1, 3, 5])
def test_bptt_gradient_check(kind, T):
    rng = np.random.default_rng(T)
    cls = LstmParams if kind == "lstm" else GruParams
    p = random_params(cls, 2, 3, 100 + T)
    X = rng.normal(size=(3, T, 2))
    R = rng.normal(size=(3, T, 3))

    def loss():
        H, _ = run_layer(kind, p, X)
        return float(np.sum(R * H))

    _, caches = run_layer(kind, p, X)
    dX, grads = backprop_layer(kind, p, caches, R)
    for name, arr in p.arrays().items():
        assert rel_err(getattr(grads, name), numeric_grad(loss, arr)) < TOL, name
    assert rel_err(dX, numeric_grad(loss, X)) < TOL


@pytest.mark.parametrize("cell", ["lstm", "gru"])
@pytest.mark.parametrize("activation", ["relu", "tanh"])
def test_network_gradient_check(cell, activation):
    cfg = NetworkConfig(cell=cell, hidden_sizes=(3, 2), dense_sizes=(4,), activation=activation)
    model = RecurrentRegressor(cfg, 2, np.random.default_rng(5))
    rng = np.random.default_rng(6)
    for arr in model.parameters():
        arr[...] = rng.normal(scale=0.7, size=arr.shape)
    Xs, y = rng.normal(size=(5, 3, 2)), rng.normal(size=5)
    _, grads = model.loss_and_grads(Xs, y)
    for arr, g in zip(model.parameters(), grads):
        assert rel_err(g, numeric_grad(lambda: model.loss_and_grads(Xs, y)[0], arr)) < TOL


# ----------------------------------------------------------------------------- optimiser and cost

def test_adam_zero_gradient_is_a_no_op():
    rng = np.random.default_rng(0)
    params = [rng.normal(size=(3, 2)), rng.normal(size=4)]
    before = [p.copy() for p in params]
    opt = Adam(params)
    for _ in range(5):
        opt.update([np.zeros_like(p) for p in params])
    assert all(np.array_equal(a, b) for a, b in zip(params, before))
    assert opt.state.step == 5


def test_adam_first_step_moves_by_learning_rate():
    p = np.array([1.0, -2.0])
    Adam([p], learning_rate=0.01).update([np.array([3.0, -0.5])])
    assert np.allclose(p, [0.99, -1.99], rtol=0, atol=1e-8)


def test_flop_count():
    for n_in, h in [(1, 1), (4, 8), (10, 200)]:
        assert step_flops("gru", n_in, h) < step_flops("lstm", n_in, h)
    assert step_flops("lstm", 1, 1) == 4 * 6 + 9
    with pytest.raises(LsmError):
        step_flops("rnn", 1, 1)


# ----------------------------------------------------------------------------- training

def linear_data(n=200, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, 1))
    return X, 3 * X[:, 0] + rng.normal(scale=0.01, size=n)


def test_tiny_gru_cuts_mse_by_90_percent():
    X, y = linear_data()
    _, hist, _ = train(NetworkConfig(cell="gru", hidden_sizes=(8,), epochs=200, seed=0), X, y)
    assert len(hist) == 200
    assert hist.train_mse[-1] <= 0.1 * hist.train_mse[0]


def test_training_is_deterministic():
    X, y = linear_data(60)
    cfg = NetworkConfig(cell="lstm", hidden_sizes=(4,), dense_sizes=(3,), epochs=5, batch_size=16, seed=3)
    m1, h1, s1 = train(cfg, X, y)
    m2, h2, s2 = train(cfg, X, y)
    assert h1 == h2
    assert all(np.array_equal(a, b) for a, b in zip(m1.parameters(), m2.parameters()))
    assert np.array_equal(s1[0], s2[0]) and np.array_equal(s1[1], s2[1])


def test_zero_learning_rate_freezes_everything():
    X, y = linear_data(40)
    cfg = NetworkConfig(epochs=4, learning_rate=0.0, batch_size=8)
    model, hist, _ = train(cfg, X, y)
    assert len(set(hist.train_mse)) == 1 and len(set(hist.val_mse)) == 1
    # train() draws the split before the weights, so rebuild that order
    rng = np.random.default_rng(cfg.seed)
    split_indices(40, 0.8, rng)
    fresh = RecurrentRegressor(cfg, 1, rng)
    assert all(np.array_equal(a, b) for a, b in zip(model.parameters(), fresh.parameters()))


def test_split_sizes_and_insufficient_data():
    X, y = linear_data(25)
    _, hist, (tr, va) = train(NetworkConfig(epochs=1), X, y)
    assert (tr.size, va.size) == (20, 5)
    assert sorted(np.concatenate([tr, va]).tolist()) == list(range(25))
    with pytest.raises(InsufficientData):
        train(NetworkConfig(epochs=1), X[:9], y[:9])
    with pytest.raises(InsufficientData):
        train(NetworkConfig(epochs=1, window=20), X[:25], y[:25])


def test_windows():
    X = np.arange(10.0).reshape(5, 2)
    Xs, ys = make_windows(X, np.arange(5.0), 3)
    assert Xs.shape == (3, 3, 2)
    assert np.array_equal(Xs[0], X[0:3]) and np.array_equal(Xs[2], X[2:5])
    assert np.array_equal(ys, [2.0, 3.0, 4.0])


def test_save_load_round_trip(tmp_path):
    X, y = linear_data(30)
    cfg = NetworkConfig(cell="lstm", hidden_sizes=(3, 2), dense_sizes=(2,), epochs=2, batch_size=8)
    model, _, _ = train(cfg, X, y)
    path = tmp_path / "m.npz"
    model.save(path)
    first = path.read_bytes()
    loaded = RecurrentRegressor.load(path)
    assert loaded.config == cfg
    assert np.array_equal(loaded.predict(X), model.predict(X))
    loaded.save(path)
    assert path.read_bytes() == first


def test_history_csv():
    buf = io.StringIO()
    TrainingHistory([0.5, 0.25], [0.75, 0.125]).write_csv(buf)
    assert buf.getvalue() == "epoch,train_mse,val_mse\n1,0.5,0.75\n2,0.25,0.125\n"


def test_config_validation():
    for bad in [dict(cell="rnn"), dict(hidden_sizes=()), dict(hidden_sizes=(0,)), dict(activation="gelu"),
                dict(epochs=-1), dict(learning_rate=-1.0), dict(validation_fraction=1.0)]:
        with pytest.raises(LsmError):
            NetworkConfig(**bad)
    big = NetworkConfig.large_scale("lstm")
    assert big.hidden_sizes == (200, 200, 200, 200) and big.batch_size == 64 and big.learning_rate == 0.001
