"""LSTM and GRU regressors in plain numpy, trained with Adam on squared error.

Cell equations::

    LSTM  i = sig(W_ix x + W_ih h + b_i)      GRU  z  = sig(W_zx x + W_zh h + b_z)
          f = sig(W_fx x + W_fh h + b_f)           r  = sig(W_rx x + W_rh h + b_r)
          o = sig(W_ox x + W_oh h + b_o)           h~ = tanh(W_hx x + r * (W_hh h) + b_h)
          g = tanh(W_cx x + W_ch h + b_c)          h' = (1 - z) * h + z * h~
          c' = f * c + i * g
          h' = o * tanh(c')

Recurrent layers keep those internal activations; the configurable
``activation`` (ReLU by default) applies only to the dense layers stacked on
the last hidden state. Inputs are ``(batch, features)`` per time step and
weights are ``(out, in)``, so a pre-activation is ``x @ W.T``.
"""

from __future__ import annotations

import csv
import json
import math
import zipfile
from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np
from scipy.special import expit

from .errors import InsufficientData, LsmError, ShapeMismatch, TrainingDiverged

LSTM_GATES = ("i", "f", "o", "c")
GRU_GATES = ("z", "r", "h")


def _uniform(rng, shape, fan_in):
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class _ParamsMixin:
    def arrays(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def zeros_like(self):
        return type(self)(**{k: np.zeros_like(v) for k, v in self.arrays().items()})

    @property
    def input_size(self) -> int:
        return getattr(self, fields(self)[0].name).shape[1]

    @property
    def hidden_size(self) -> int:
        return getattr(self, fields(self)[0].name).shape[0]

    def check(self):
        n_in, n_h = self.input_size, self.hidden_size
        for name, arr in self.arrays().items():
            if name.startswith("b_"):
                expected = (n_h,)
            elif name.endswith("x"):
                expected = (n_h, n_in)
            else:
                expected = (n_h, n_h)
            if arr.shape != expected:
                raise ShapeMismatch(f"{name} has shape {arr.shape}, expected {expected}")


@dataclass
class LstmParams(_ParamsMixin):
    W_ix: np.ndarray
    W_ih: np.ndarray
    b_i: np.ndarray
    W_fx: np.ndarray
    W_fh: np.ndarray
    b_f: np.ndarray
    W_ox: np.ndarray
    W_oh: np.ndarray
    b_o: np.ndarray
    W_cx: np.ndarray
    W_ch: np.ndarray
    b_c: np.ndarray

    def __post_init__(self):
        self.check()

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "LstmParams":
        kw = {}
        for g in LSTM_GATES:
            kw[f"W_{g}x"] = np.zeros((hidden_size, input_size))
            kw[f"W_{g}h"] = np.zeros((hidden_size, hidden_size))
            kw[f"b_{g}"] = np.zeros(hidden_size)
        return cls(**kw)

    @classmethod
    def init(cls, input_size: int, hidden_size: int, rng: np.random.Generator) -> "LstmParams":
        """Weights uniform in +-1/sqrt(fan_in), biases zero."""
        p = cls.zeros(input_size, hidden_size)
        for g in LSTM_GATES:
            setattr(p, f"W_{g}x", _uniform(rng, (hidden_size, input_size), input_size))
            setattr(p, f"W_{g}h", _uniform(rng, (hidden_size, hidden_size), hidden_size))
        return p


@dataclass
class GruParams(_ParamsMixin):
    W_zx: np.ndarray
    W_zh: np.ndarray
    b_z: np.ndarray
    W_rx: np.ndarray
    W_rh: np.ndarray
    b_r: np.ndarray
    W_hx: np.ndarray
    W_hh: np.ndarray
    b_h: np.ndarray

    def __post_init__(self):
        self.check()

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "GruParams":
        kw = {}
        for g in GRU_GATES:
            kw[f"W_{g}x"] = np.zeros((hidden_size, input_size))
            kw[f"W_{g}h"] = np.zeros((hidden_size, hidden_size))
            kw[f"b_{g}"] = np.zeros(hidden_size)
        return cls(**kw)

    @classmethod
    def init(cls, input_size: int, hidden_size: int, rng: np.random.Generator) -> "GruParams":
        p = cls.zeros(input_size, hidden_size)
        for g in GRU_GATES:
            setattr(p, f"W_{g}x", _uniform(rng, (hidden_size, input_size), input_size))
            setattr(p, f"W_{g}h", _uniform(rng, (hidden_size, hidden_size), hidden_size))
        return p


def _check_inputs(params, x, *states):
    if x.shape[-1] != params.input_size:
        raise ShapeMismatch(f"input has {x.shape[-1]} features, cell expects {params.input_size}")
    for s in states:
        if s.shape[-1] != params.hidden_size or s.shape[:-1] != x.shape[:-1]:
            raise ShapeMismatch(f"state shape {s.shape} does not match input {x.shape} / hidden {params.hidden_size}")


# ----------------------------------------------------------------------------- LSTM

def lstm_forward(p: LstmParams, x, h_prev, c_prev):
    """One LSTM step returning ``(h, c, cache)``; works on single vectors or batches."""
    x, h_prev, c_prev = (np.asarray(a, dtype=float) for a in (x, h_prev, c_prev))
    _check_inputs(p, x, h_prev, c_prev)
    i = expit(x @ p.W_ix.T + h_prev @ p.W_ih.T + p.b_i)
    f = expit(x @ p.W_fx.T + h_prev @ p.W_fh.T + p.b_f)
    o = expit(x @ p.W_ox.T + h_prev @ p.W_oh.T + p.b_o)
    g = np.tanh(x @ p.W_cx.T + h_prev @ p.W_ch.T + p.b_c)
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (x, h_prev, c_prev, i, f, o, g, tc)


def lstm_step(p: LstmParams, x, h_prev, c_prev):
    h, c, _ = lstm_forward(p, x, h_prev, c_prev)
    return h, c


def lstm_backward(p: LstmParams, cache, dh, dc, grads: LstmParams):
    """Backpropagate one step; accumulates into ``grads`` and returns ``(dx, dh_prev, dc_prev)``."""
    x, h_prev, c_prev, i, f, o, g, tc = cache
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc**2)
    pre = {
        "i": dc * g * i * (1.0 - i),
        "f": dc * c_prev * f * (1.0 - f),
        "o": do * o * (1.0 - o),
        "c": dc * i * (1.0 - g**2),
    }
    dc_prev = dc * f
    x2, h2 = np.atleast_2d(x), np.atleast_2d(h_prev)
    dx = 0.0
    dh_prev = 0.0
    for gate, d in pre.items():
        d2 = np.atleast_2d(d)
        getattr(grads, f"W_{gate}x")[...] += d2.T @ x2
        getattr(grads, f"W_{gate}h")[...] += d2.T @ h2
        getattr(grads, f"b_{gate}")[...] += d2.sum(axis=0)
        dx = dx + d @ getattr(p, f"W_{gate}x")
        dh_prev = dh_prev + d @ getattr(p, f"W_{gate}h")
    return dx, dh_prev, dc_prev


# ----------------------------------------------------------------------------- GRU

def gru_forward(p: GruParams, x, h_prev):
    x, h_prev = (np.asarray(a, dtype=float) for a in (x, h_prev))
    _check_inputs(p, x, h_prev)
    z = expit(x @ p.W_zx.T + h_prev @ p.W_zh.T + p.b_z)
    r = expit(x @ p.W_rx.T + h_prev @ p.W_rh.T + p.b_r)
    a = h_prev @ p.W_hh.T
    ht = np.tanh(x @ p.W_hx.T + r * a + p.b_h)
    h = (1.0 - z) * h_prev + z * ht
    return h, (x, h_prev, z, r, a, ht)


def gru_step(p: GruParams, x, h_prev):
    return gru_forward(p, x, h_prev)[0]


def gru_backward(p: GruParams, cache, dh, grads: GruParams):
    """Backpropagate one step; accumulates into ``grads`` and returns ``(dx, dh_prev)``."""
    x, h_prev, z, r, a, ht = cache
    x2, h2 = np.atleast_2d(x), np.atleast_2d(h_prev)
    dpre_h = dh * z * (1.0 - ht**2)
    dpre_z = dh * (ht - h_prev) * z * (1.0 - z)
    da = dpre_h * r
    dpre_r = dpre_h * a * r * (1.0 - r)

    dh_prev = dh * (1.0 - z) + da @ p.W_hh + dpre_z @ p.W_zh + dpre_r @ p.W_rh
    dx = dpre_h @ p.W_hx + dpre_z @ p.W_zx + dpre_r @ p.W_rx

    grads.W_hx[...] += np.atleast_2d(dpre_h).T @ x2
    grads.W_hh[...] += np.atleast_2d(da).T @ h2
    grads.b_h[...] += np.atleast_2d(dpre_h).sum(axis=0)
    for gate, d in (("z", dpre_z), ("r", dpre_r)):
        d2 = np.atleast_2d(d)
        getattr(grads, f"W_{gate}x")[...] += d2.T @ x2
        getattr(grads, f"W_{gate}h")[...] += d2.T @ h2
        getattr(grads, f"b_{gate}")[...] += d2.sum(axis=0)
    return dx, dh_prev


# ----------------------------------------------------------------------------- sequences

def run_layer(kind: str, p, X: np.ndarray):
    """Run a cell over ``X`` of shape ``(batch, time, features)`` from zero state.

    Returns ``(H, caches)`` with ``H`` of shape ``(batch, time, hidden)``.
    """
    B, T, _ = X.shape
    h = np.zeros((B, p.hidden_size))
    c = np.zeros((B, p.hidden_size))
    H = np.empty((B, T, p.hidden_size))
    caches = []
    for t in range(T):
        if kind == "lstm":
            h, c, cache = lstm_forward(p, X[:, t], h, c)
        else:
            h, cache = gru_forward(p, X[:, t], h)
        H[:, t] = h
        caches.append(cache)
    return H, caches


def backprop_layer(kind: str, p, caches, dH: np.ndarray):
    """Backpropagation through time for one layer; returns ``(dX, grads)``."""
    B, T, _ = dH.shape
    grads = p.zeros_like()
    dX = np.empty((B, T, p.input_size))
    dh_next = np.zeros((B, p.hidden_size))
    dc_next = np.zeros((B, p.hidden_size))
    for t in range(T - 1, -1, -1):
        dh = dH[:, t] + dh_next
        if kind == "lstm":
            dx, dh_next, dc_next = lstm_backward(p, caches[t], dh, dc_next, grads)
        else:
            dx, dh_next = gru_backward(p, caches[t], dh, grads)
        dX[:, t] = dx
    return dX, grads


def step_flops(kind: str, input_size: int, hidden_size: int) -> int:
    """Floating-point operations of one forward step for a single sample.

    Each gate costs two matrix-vector products (``2*H*in`` and ``2*H*H``) plus
    two vector additions; elementwise work is counted per hidden unit.
    """
    gate = 2 * hidden_size * input_size + 2 * hidden_size * hidden_size + 2 * hidden_size
    if kind == "lstm":
        # 4 activations, f*c + i*g (3), tanh(c), o*tanh(c)
        return 4 * gate + 9 * hidden_size
    if kind == "gru":
        # 3 activations, r*a, (1-z)*h + z*h~ (4)
        return 3 * gate + 8 * hidden_size
    raise LsmError(f"unknown cell kind {kind!r}")


# ----------------------------------------------------------------------------- optimiser

@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0


class Adam:
    """Bias-corrected Adam over a list of parameter arrays updated in place."""

    def __init__(self, params: Sequence[np.ndarray], learning_rate: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.state = AdamState([np.zeros_like(p) for p in self.params], [np.zeros_like(p) for p in self.params])

    def update(self, grads: Sequence[np.ndarray]) -> None:
        s = self.state
        s.step += 1
        c1 = 1.0 - self.beta1**s.step
        c2 = 1.0 - self.beta2**s.step
        for p, g, m, v in zip(self.params, grads, s.m, s.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.learning_rate * (m / c1) / (np.sqrt(v / c2) + self.eps)


# ----------------------------------------------------------------------------- network

@dataclass(frozen=True)
class NetworkConfig:
    """Architecture and training settings.

    :meth:`large_scale` gives four 200-unit layers, 200 epochs, batch 64 and
    learning rate 0.001; the defaults here are desk-sized.
    """

    cell: str = "gru"
    hidden_sizes: tuple[int, ...] = (8,)
    dense_sizes: tuple[int, ...] = ()
    activation: str = "relu"
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 0.001
    validation_fraction: float = 0.2
    window: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        object.__setattr__(self, "dense_sizes", tuple(int(h) for h in self.dense_sizes))
        if self.cell not in ("lstm", "gru"):
            raise LsmError(f"cell must be 'lstm' or 'gru', got {self.cell!r}")
        if self.activation not in ("relu", "tanh"):
            raise LsmError(f"activation must be 'relu' or 'tanh', got {self.activation!r}")
        if not self.hidden_sizes or min(self.hidden_sizes) < 1 or min(self.dense_sizes, default=1) < 1:
            raise LsmError("layer sizes must be >= 1")
        if self.epochs < 0 or self.batch_size < 1 or self.window < 1:
            raise LsmError("epochs >= 0, batch_size >= 1 and window >= 1 required")
        if self.learning_rate < 0:
            raise LsmError("learning_rate must be non-negative")
        if not 0 < self.validation_fraction < 1:
            raise LsmError("validation_fraction must lie in (0, 1)")

    @classmethod
    def large_scale(cls, cell: str = "gru", **overrides) -> "NetworkConfig":
        kw = dict(cell=cell, hidden_sizes=(200, 200, 200, 200), epochs=200, batch_size=64, learning_rate=0.001)
        kw.update(overrides)
        return cls(**kw)


def _act(kind, z):
    return np.maximum(z, 0.0) if kind == "relu" else np.tanh(z)


def _act_grad(kind, z, a):
    return (z > 0).astype(float) if kind == "relu" else 1.0 - a**2


class RecurrentRegressor:
    """Stacked recurrent layers, optional dense layers and a linear output unit.

    Inputs and targets are standardised with training-split statistics;
    predictions come back in target units.
    """

    def __init__(self, config: NetworkConfig, n_features: int, rng: np.random.Generator | None = None):
        self.config = config
        self.n_features = n_features
        rng = rng if rng is not None else np.random.default_rng(config.seed)
        cell_cls = LstmParams if config.cell == "lstm" else GruParams
        self.layers = []
        width = n_features
        for h in config.hidden_sizes:
            self.layers.append(cell_cls.init(width, h, rng))
            width = h
        self.dense = []
        for h in config.dense_sizes:
            self.dense.append([_uniform(rng, (h, width), width), np.zeros(h)])
            width = h
        self.out_W = _uniform(rng, (1, width), width)
        self.out_b = np.zeros(1)
        self.x_mean = np.zeros(n_features)
        self.x_scale = np.ones(n_features)
        self.y_mean = 0.0
        self.y_scale = 1.0

    def parameters(self) -> list[np.ndarray]:
        out = []
        for p in self.layers:
            out.extend(p.arrays().values())
        for W, b in self.dense:
            out.extend([W, b])
        out.extend([self.out_W, self.out_b])
        return out

    def _as_sequences(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 2:
            X = X[:, None, :]
        if X.ndim != 3 or X.shape[2] != self.n_features:
            raise ShapeMismatch(f"expected (n, {self.n_features}) or (n, T, {self.n_features}), got {X.shape}")
        return X

    def _forward(self, Xs: np.ndarray):
        caches = []
        H = Xs
        for p in self.layers:
            H, c = run_layer(self.config.cell, p, H)
            caches.append((H, c))
        a = H[:, -1]
        dense_cache = []
        for W, b in self.dense:
            z = a @ W.T + b
            a_new = _act(self.config.activation, z)
            dense_cache.append((a, z, a_new))
            a = a_new
        out = (a @ self.out_W.T + self.out_b)[:, 0]
        return out, (caches, dense_cache, a)

    def loss_and_grads(self, Xs: np.ndarray, y: np.ndarray):
        """Mean squared error on standardised sequences and its gradient per parameter."""
        pred, (caches, dense_cache, a_last) = self._forward(Xs)
        B = Xs.shape[0]
        err = pred - y
        loss = float(np.mean(err**2))
        dout = (2.0 / B) * err[:, None]
        g_out_W = dout.T @ a_last
        g_out_b = dout.sum(axis=0)
        da = dout @ self.out_W
        dense_grads = []
        for (W, b), (a_in, z, a_out) in zip(reversed(self.dense), reversed(dense_cache)):
            dz = da * _act_grad(self.config.activation, z, a_out)
            dense_grads.append([dz.T @ a_in, dz.sum(axis=0)])
            da = dz @ W
        dense_grads.reverse()
        layer_grads = []
        T = Xs.shape[1]
        dH = np.zeros((B, T, self.layers[-1].hidden_size))
        dH[:, -1] = da
        for k in range(len(self.layers) - 1, -1, -1):
            dX, g = backprop_layer(self.config.cell, self.layers[k], caches[k][1], dH)
            layer_grads.append(g)
            dH = dX
        layer_grads.reverse()
        flat = []
        for g in layer_grads:
            flat.extend(g.arrays().values())
        for gW, gb in dense_grads:
            flat.extend([gW, gb])
        flat.extend([g_out_W, g_out_b])
        return loss, flat

    def _standardize(self, X) -> np.ndarray:
        Xs = self._as_sequences(X)
        return (Xs - self.x_mean) / self.x_scale

    def predict(self, X) -> np.ndarray:
        pred, _ = self._forward(self._standardize(X))
        return pred * self.y_scale + self.y_mean

    # save/load --------------------------------------------------------------
    def save(self, path) -> None:
        """Write an ``.npz`` archive: a JSON ``config`` entry plus one array per parameter.

        Array names are ``layer{k}.{W_ix,...}``, ``dense{k}.W`` / ``dense{k}.b``,
        ``out.W``, ``out.b`` and the scaling vectors ``x_mean``, ``x_scale``,
        ``y_stats``; each array carries its own shape header.
        """
        arrays = {"config": np.array(json.dumps(_config_dict(self.config))),
                  "n_features": np.array(self.n_features),
                  "x_mean": self.x_mean, "x_scale": self.x_scale,
                  "y_stats": np.array([self.y_mean, self.y_scale])}
        for k, p in enumerate(self.layers):
            for name, arr in p.arrays().items():
                arrays[f"layer{k}.{name}"] = arr
        for k, (W, b) in enumerate(self.dense):
            arrays[f"dense{k}.W"] = W
            arrays[f"dense{k}.b"] = b
        arrays["out.W"] = self.out_W
        arrays["out.b"] = self.out_b
        # fixed member timestamps keep the archive byte-identical across runs
        with zipfile.ZipFile(path, "w") as zf:
            for name, arr in arrays.items():
                info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
                with zf.open(info, "w") as fh:
                    np.lib.format.write_array(fh, np.asanyarray(arr), allow_pickle=False)

    @classmethod
    def load(cls, path) -> "RecurrentRegressor":
        with np.load(path) as data:
            cfg = json.loads(str(data["config"]))
            cfg["hidden_sizes"] = tuple(cfg["hidden_sizes"])
            cfg["dense_sizes"] = tuple(cfg["dense_sizes"])
            model = cls(NetworkConfig(**cfg), int(data["n_features"]))
            for k, p in enumerate(model.layers):
                for name in p.arrays():
                    setattr(p, name, data[f"layer{k}.{name}"].copy())
            for k, pair in enumerate(model.dense):
                pair[0] = data[f"dense{k}.W"].copy()
                pair[1] = data[f"dense{k}.b"].copy()
            model.out_W = data["out.W"].copy()
            model.out_b = data["out.b"].copy()
            model.x_mean = data["x_mean"].copy()
            model.x_scale = data["x_scale"].copy()
            model.y_mean, model.y_scale = (float(v) for v in data["y_stats"])
        return model


def _config_dict(cfg: NetworkConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


@dataclass
class TrainingHistory:
    train_mse: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.train_mse)

    def write_csv(self, stream) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["epoch", "train_mse", "val_mse"])
        for e, (tr, va) in enumerate(zip(self.train_mse, self.val_mse), start=1):
            writer.writerow([e, repr(tr), repr(va)])


def make_windows(X, y, window: int):
    """Sliding windows over consecutive rows: sample ``i`` sees rows ``i-window+1 .. i``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if window == 1:
        return X[:, None, :], y
    n = X.shape[0] - window + 1
    if n < 1:
        raise InsufficientData(f"window {window} longer than the {X.shape[0]} rows")
    idx = np.arange(window)[None, :] + np.arange(n)[:, None]
    return X[idx], y[window - 1:]


def split_indices(n: int, fraction: float, rng: np.random.Generator):
    """Seeded shuffle, first ``ceil(fraction * n)`` rows for training."""
    perm = rng.permutation(n)
    cut = math.ceil(fraction * n)
    return perm[:cut], perm[cut:]


def train(config: NetworkConfig, X, y):
    """Fit a recurrent regressor on an internal seeded train/validation split.

    Returns ``(model, history, (train_idx, val_idx))``. History holds one
    train/validation MSE pair per epoch, in target units, measured after the
    epoch's updates. Indices refer to rows after windowing.
    """
    Xs, ys = make_windows(X, y, config.window)
    n = Xs.shape[0]
    if n < 10:
        raise InsufficientData(f"need at least 10 samples, got {n}")
    if not (np.all(np.isfinite(Xs)) and np.all(np.isfinite(ys))):
        raise LsmError("features and targets must be finite")
    rng = np.random.default_rng(config.seed)
    tr, va = split_indices(n, 1.0 - config.validation_fraction, rng)
    model = RecurrentRegressor(config, Xs.shape[2], rng)

    flat = Xs[tr].reshape(-1, Xs.shape[2])
    model.x_mean = flat.mean(axis=0)
    scale = flat.std(axis=0)
    model.x_scale = np.where(scale > 0, scale, 1.0)
    model.y_mean = float(ys[tr].mean())
    y_scale = float(ys[tr].std())
    model.y_scale = y_scale if y_scale > 0 else 1.0

    Z = (Xs - model.x_mean) / model.x_scale
    t = (ys - model.y_mean) / model.y_scale
    opt = Adam(model.parameters(), learning_rate=config.learning_rate)
    history = TrainingHistory()
    unit = model.y_scale**2

    # overflow is caught by the finiteness checks below, so numpy need not warn
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(config.epochs):
            order = tr[rng.permutation(tr.size)]
            for start in range(0, order.size, config.batch_size):
                batch = order[start:start + config.batch_size]
                loss, grads = model.loss_and_grads(Z[batch], t[batch])
                if not math.isfinite(loss):
                    raise TrainingDiverged("training loss became non-finite")
                opt.update(grads)
            train_mse = float(np.mean((model._forward(Z[tr])[0] - t[tr]) ** 2)) * unit
            val_mse = float(np.mean((model._forward(Z[va])[0] - t[va]) ** 2)) * unit
            if not (math.isfinite(train_mse) and math.isfinite(val_mse)):
                raise TrainingDiverged("epoch loss became non-finite")
            history.train_mse.append(train_mse)
            history.val_mse.append(val_mse)
    return model, history, (tr, va)
