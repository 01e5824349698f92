"""Conv1D + Bi-LSTM + attention classifier in plain numpy.

Forward and exact reverse-mode backward passes work on batches shaped
``(B, n, 4)``; a single ``(n, 4)`` matrix is treated as a batch of one.
Everything is float64.

LSTM gate blocks are stacked in the order i, f, o, g along the last axis of
``W`` (input) and ``U`` (recurrent) and in ``b``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from g4attn.errors import ContractError, ShapeError

CNN = "cnn"
CNN_LSTM = "cnn_lstm"
CNN_LSTM_ATTN = "cnn_lstm_attn"
FULL = "full"
VARIANTS = (CNN, CNN_LSTM, CNN_LSTM_ATTN, FULL)

CHECKPOINT_FORMAT = "g4attn-checkpoint/1"


@dataclass(frozen=True)
class ModelConfig:
    kernel_size: int = 11
    n_filters: int = 64
    lstm_units: int = 128
    dense_units: int = 64
    variant: str = FULL
    input_length: int = 124

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be a positive odd integer")
        for name in ("n_filters", "lstm_units", "dense_units", "input_length"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @property
    def directions(self) -> tuple[str, ...]:
        return {CNN: (), CNN_LSTM: ("fwd",), CNN_LSTM_ATTN: ("fwd",), FULL: ("fwd", "bwd")}[
            self.variant]

    @property
    def feature_dim(self) -> int:
        """Width of the pooled vector fed to the prediction head."""
        if self.variant == CNN:
            return self.n_filters
        return self.lstm_units * len(self.directions)

    @property
    def attention(self) -> bool:
        return self.variant in (CNN_LSTM_ATTN, FULL)

    def shapes(self) -> dict[str, tuple[int, ...]]:
        K, F, d, h = self.kernel_size, self.n_filters, self.lstm_units, self.dense_units
        out = {"conv.W": (K, 4, F), "conv.b": (F,)}
        for direction in self.directions:
            out[f"lstm_{direction}.W"] = (F, 4 * d)
            out[f"lstm_{direction}.U"] = (d, 4 * d)
            out[f"lstm_{direction}.b"] = (4 * d,)
        D = self.feature_dim
        if self.attention:
            out["attn.w"] = (D,)
            out["attn.b"] = ()
        out.update({"fc1.W": (D, h), "fc1.b": (h,), "fc2.w": (h,), "fc2.b": ()})
        return out

    def fan_in(self, name: str) -> int:
        K, F, d = self.kernel_size, self.n_filters, self.lstm_units
        layer, _, kind = name.partition(".")
        if layer == "conv":
            return K * 4
        if layer.startswith("lstm"):
            return {"W": F, "U": d, "b": F + d}[kind]
        if layer in ("attn", "fc1"):
            return self.feature_dim
        return self.dense_units

    def n_params(self) -> int:
        return sum(int(np.prod(s)) for s in self.shapes().values())


@dataclass
class ModelParams:
    config: ModelConfig
    tensors: dict[str, np.ndarray]

    def __post_init__(self):
        expected = self.config.shapes()
        if set(expected) != set(self.tensors):
            raise ShapeError(f"parameter names {sorted(self.tensors)} do not match "
                             f"{self.config.variant} layout {sorted(expected)}")
        for name, shape in expected.items():
            if self.tensors[name].shape != shape:
                raise ShapeError(f"{name}: shape {self.tensors[name].shape} != {shape}")

    def __getitem__(self, name):
        return self.tensors[name]

    def copy(self) -> ModelParams:
        return ModelParams(self.config, {k: v.copy() for k, v in self.tensors.items()})


def init_params(config: ModelConfig, seed: int = 123) -> ModelParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every tensor."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in config.shapes().items():
        bound = 1.0 / np.sqrt(config.fan_in(name))
        tensors[name] = rng.uniform(-bound, bound, size=shape)
    return ModelParams(config, tensors)


def _sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _as_batch(S):
    S = np.asarray(S, dtype=np.float64)
    if S.ndim == 2:
        S = S[None]
    if S.ndim != 3 or S.shape[2] != 4:
        raise ShapeError(f"input: expected (n, 4) or (B, n, 4), got {S.shape}")
    return S


# ---- convolution ---------------------------------------------------------

def _conv_cols(S, K):
    pad = (K - 1) // 2
    Sp = np.pad(S, ((0, 0), (pad, pad), (0, 0)))
    # (B, n, 4, K) -> (B, n, K*4) with index k*4 + c
    win = np.lib.stride_tricks.sliding_window_view(Sp, K, axis=1)
    return np.ascontiguousarray(win.transpose(0, 1, 3, 2)).reshape(S.shape[0], S.shape[1], K * 4)


def _conv(S, params):
    W, b = params["conv.W"], params["conv.b"]
    K = W.shape[0]
    if W.shape[1] != 4:
        raise ShapeError(f"conv: kernel shape {W.shape} needs 4 input channels")
    if S.shape[1] < K:
        raise ShapeError(f"conv: input length {S.shape[1]} shorter than kernel size {K}")
    cols = _conv_cols(S, K)
    xi = cols @ W.reshape(K * 4, -1) + b
    return np.maximum(xi, 0.0), (cols, xi)


def conv1d_forward(S, params: ModelParams) -> np.ndarray:
    """Same-length cross-correlation followed by ReLU: ``(n, 4) -> (n, F)``."""
    S = np.asarray(S, dtype=np.float64)
    single = S.ndim == 2
    xf, _ = _conv(_as_batch(S), params)
    return xf[0] if single else xf


# ---- LSTM ----------------------------------------------------------------

def _lstm(x, W, U, b):
    """Run one direction left to right over ``x`` (B, n, F)."""
    B, n, _ = x.shape
    d = U.shape[0]
    if W.shape != (x.shape[2], 4 * d) or U.shape != (d, 4 * d) or b.shape != (4 * d,):
        raise ShapeError(f"lstm: weights {W.shape}/{U.shape}/{b.shape} do not fit input "
                         f"width {x.shape[2]}")
    xw = x @ W + b
    gates = np.empty((B, n, 4 * d))
    cs = np.empty((B, n, d))
    tcs = np.empty((B, n, d))
    hs = np.empty((B, n, d))
    h = np.zeros((B, d))
    c = np.zeros((B, d))
    for t in range(n):
        z = xw[:, t] + h @ U
        a = gates[:, t]
        a[:, :3 * d] = _sigmoid(z[:, :3 * d])
        a[:, 3 * d:] = np.tanh(z[:, 3 * d:])
        c = a[:, d:2 * d] * c + a[:, :d] * a[:, 3 * d:]
        cs[:, t] = c
        tcs[:, t] = np.tanh(c)
        h = a[:, 2 * d:3 * d] * tcs[:, t]
        hs[:, t] = h
    return hs, (x, gates, cs, tcs, hs)


def _lstm_backward(dH, cache, W, U):
    x, gates, cs, tcs, hs = cache
    B, n, d = hs.shape
    dz_all = np.empty((B, n, 4 * d))
    dU = np.zeros_like(U)
    dh_next = np.zeros((B, d))
    dc_next = np.zeros((B, d))
    for t in range(n - 1, -1, -1):
        a = gates[:, t]
        i, f, o, g = a[:, :d], a[:, d:2 * d], a[:, 2 * d:3 * d], a[:, 3 * d:]
        dh = dH[:, t] + dh_next
        tc = tcs[:, t]
        dc = dc_next + dh * o * (1.0 - tc * tc)
        c_prev = cs[:, t - 1] if t > 0 else 0.0
        dz = dz_all[:, t]
        dz[:, :d] = dc * g * i * (1.0 - i)
        dz[:, d:2 * d] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * d:3 * d] = dh * tc * o * (1.0 - o)
        dz[:, 3 * d:] = dc * i * (1.0 - g * g)
        dc_next = dc * f
        if t > 0:
            dU += hs[:, t - 1].T @ dz
        dh_next = dz @ U.T
    flat = dz_all.reshape(B * n, 4 * d)
    dW = x.reshape(B * n, -1).T @ flat
    db = flat.sum(axis=0)
    dx = dz_all @ W.T
    return dx, dW, dU, db


def bilstm_forward(xf, params: ModelParams) -> np.ndarray:
    """Per-position hidden states; row t is concat(forward h_t, backward h_t)
    for the full model, forward h_t alone for the unidirectional variants."""
    xf = np.asarray(xf, dtype=np.float64)
    single = xf.ndim == 2
    x = xf[None] if single else xf
    H, _ = _recurrent(x, params)
    return H[0] if single else H


def _recurrent(x, params):
    outs, caches = [], []
    for direction in params.config.directions:
        p = f"lstm_{direction}."
        xin = x if direction == "fwd" else x[:, ::-1]
        hs, cache = _lstm(xin, params[p + "W"], params[p + "U"], params[p + "b"])
        outs.append(hs if direction == "fwd" else hs[:, ::-1])
        caches.append(cache)
    return np.concatenate(outs, axis=2), caches


# ---- attention and head --------------------------------------------------

def attention_scores(H, params: ModelParams) -> np.ndarray:
    """Linear per-position scores ``H @ w + b``."""
    w = params["attn.w"]
    if H.shape[-1] != w.shape[0]:
        raise ShapeError(f"attention: hidden width {H.shape[-1]} != weight length {w.shape[0]}")
    return H @ w + params["attn.b"]


def attention_normalize(alpha) -> np.ndarray:
    """Softmax over the last axis, shifted by the max for stability."""
    alpha = np.asarray(alpha, dtype=np.float64)
    e = np.exp(alpha - alpha.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def fuse(weights, H) -> np.ndarray:
    """Attention-weighted sum of the rows of ``H``."""
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(np.abs(weights.sum(axis=-1) - 1.0) > 1e-9):
        raise ContractError("fuse: attention weights must sum to 1")
    return np.einsum("...n,...nd->...d", weights, H)


def predict_head(X, params: ModelParams) -> np.ndarray:
    """logistic(fc2(ReLU(fc1(X))))."""
    z1 = X @ params["fc1.W"] + params["fc1.b"]
    return _sigmoid(np.maximum(z1, 0.0) @ params["fc2.w"] + params["fc2.b"])


@dataclass
class ForwardTrace:
    """Intermediate activations kept for the backward pass."""

    conv: tuple
    xf: np.ndarray
    lstm: list = field(default_factory=list)
    H: np.ndarray | None = None
    alpha: np.ndarray | None = None
    weights: np.ndarray | None = None
    pool_index: np.ndarray | None = None
    X: np.ndarray | None = None
    z1: np.ndarray | None = None
    a1: np.ndarray | None = None
    Y: np.ndarray | None = None


def forward(S, params: ModelParams, variant: str | None = None):
    """Return predictions ``Y`` (shape (B,)) and the trace for ``backward``."""
    cfg = params.config
    if variant is not None and variant != cfg.variant:
        raise ShapeError(f"forward: params are laid out for {cfg.variant!r}, not {variant!r}")
    S = _as_batch(S)
    xf, conv_cache = _conv(S, params)
    tr = ForwardTrace(conv=conv_cache, xf=xf)
    if cfg.variant == CNN:
        tr.pool_index = xf.argmax(axis=1)
        X = np.take_along_axis(xf, tr.pool_index[:, None, :], axis=1)[:, 0]
    else:
        tr.H, tr.lstm = _recurrent(xf, params)
        if cfg.attention:
            tr.alpha = attention_scores(tr.H, params)
            tr.weights = attention_normalize(tr.alpha)
            X = np.einsum("bn,bnd->bd", tr.weights, tr.H)
        else:
            X = tr.H[:, -1]
    if X.shape[1] != params["fc1.W"].shape[0]:
        raise ShapeError(f"head: feature width {X.shape[1]} != fc1 input "
                         f"{params['fc1.W'].shape[0]}")
    tr.X = X
    tr.z1 = X @ params["fc1.W"] + params["fc1.b"]
    tr.a1 = np.maximum(tr.z1, 0.0)
    tr.Y = _sigmoid(tr.a1 @ params["fc2.w"] + params["fc2.b"])
    return tr.Y, tr


def backward(trace: ForwardTrace, upstream, params: ModelParams,
             return_intermediates: bool = False):
    """Gradients of ``sum(upstream * Y)`` with respect to every parameter.

    With ``return_intermediates`` the gradients with respect to the attention
    scores and pooled features are returned as well.
    """
    cfg = params.config
    dY = np.asarray(upstream, dtype=np.float64).reshape(trace.Y.shape)
    grads = {}
    Y = trace.Y
    dz2 = dY * Y * (1.0 - Y)
    grads["fc2.w"] = trace.a1.T @ dz2
    grads["fc2.b"] = np.asarray(dz2.sum())
    dz1 = np.outer(dz2, params["fc2.w"]) * (trace.z1 > 0)
    grads["fc1.W"] = trace.X.T @ dz1
    grads["fc1.b"] = dz1.sum(axis=0)
    dX = dz1 @ params["fc1.W"].T
    extra = {"X": dX}

    xf = trace.xf
    if cfg.variant == CNN:
        dxf = np.zeros_like(xf)
        np.put_along_axis(dxf, trace.pool_index[:, None, :], dX[:, None, :], axis=1)
    else:
        if cfg.attention:
            wts, H = trace.weights, trace.H
            dH = wts[:, :, None] * dX[:, None, :]
            dwts = np.einsum("bnd,bd->bn", H, dX)
            dalpha = wts * (dwts - (wts * dwts).sum(axis=1, keepdims=True))
            grads["attn.w"] = np.einsum("bn,bnd->d", dalpha, H)
            grads["attn.b"] = np.asarray(dalpha.sum())
            dH += dalpha[:, :, None] * params["attn.w"]
            extra["alpha"] = dalpha
        else:
            dH = np.zeros_like(trace.H)
            dH[:, -1] = dX
        d = cfg.lstm_units
        dxf = np.zeros_like(xf)
        for k, (direction, cache) in enumerate(zip(cfg.directions, trace.lstm)):
            p = f"lstm_{direction}."
            dHk = dH[:, :, k * d:(k + 1) * d]
            if direction == "bwd":
                dHk = dHk[:, ::-1]
            dx, grads[p + "W"], grads[p + "U"], grads[p + "b"] = _lstm_backward(
                dHk, cache, params[p + "W"], params[p + "U"])
            dxf += dx if direction == "fwd" else dx[:, ::-1]

    cols, xi = trace.conv
    dxi = dxf * (xi > 0)
    K = cfg.kernel_size
    grads["conv.W"] = (cols.reshape(-1, K * 4).T @ dxi.reshape(-1, dxi.shape[2])).reshape(K, 4, -1)
    grads["conv.b"] = dxi.sum(axis=(0, 1))
    grads = {name: grads[name] for name in params.tensors}
    if return_intermediates:
        return grads, extra
    return grads


def predict(S, params: ModelParams, chunk: int = 256) -> np.ndarray:
    S = _as_batch(S)
    return np.concatenate([forward(S[i:i + chunk], params)[0]
                           for i in range(0, len(S), chunk)]) if len(S) else np.zeros(0)


# ---- gradient checking -----------------------------------------------------

@dataclass
class GradCheckReport:
    max_rel_error: dict[str, float]
    tolerance: float

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.max_rel_error.items() if not v <= self.tolerance]

    @property
    def passed(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        return [f"{k:<16} {v:.3e} {'ok' if v <= self.tolerance else 'FAIL'}"
                for k, v in self.max_rel_error.items()]


def relative_error(a, b, floor: float = 1e-6):
    """``|a - b| / max(|a|, |b|, floor)`` elementwise; the floor keeps
    exactly-zero gradients from dividing rounding noise by zero."""
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def numeric_gradient(params: ModelParams, S, upstream, name: str, eps: float = 1e-5):
    """Central finite differences of ``sum(upstream * Y)`` for one tensor."""
    t = params.tensors[name]
    out = np.zeros_like(t)
    flat, gflat = t.reshape(-1), out.reshape(-1)
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + eps
        lp = float(np.dot(upstream, forward(S, params)[0]))
        flat[j] = orig - eps
        lm = float(np.dot(upstream, forward(S, params)[0]))
        flat[j] = orig
        gflat[j] = (lp - lm) / (2 * eps)
    return out


def gradient_check(params: ModelParams, S, tolerance: float = 1e-4, eps: float = 1e-5,
                   upstream=None, analytic: dict[str, np.ndarray] | None = None,
                   names: Iterable[str] | None = None) -> GradCheckReport:
    """Compare ``backward`` against central differences tensor by tensor.

    ``analytic`` may be passed to check an externally supplied gradient.
    """
    S = _as_batch(S)
    if upstream is None:
        upstream = np.ones(S.shape[0])
    upstream = np.asarray(upstream, dtype=np.float64)
    if analytic is None:
        _, trace = forward(S, params)
        analytic = backward(trace, upstream, params)
    work = params.copy()
    report = {}
    for name in names or params.tensors:
        num = numeric_gradient(work, S, upstream, name, eps)
        err = relative_error(analytic[name], num)
        report[name] = float(err.max()) if err.size else 0.0
    return GradCheckReport(report, tolerance)


# ---- checkpoints -----------------------------------------------------------

def checkpoint_dict(params: ModelParams, extra: dict | None = None) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "config": asdict(params.config),
        "tensors": {name: {"shape": list(t.shape), "data": t.reshape(-1).tolist()}
                    for name, t in params.tensors.items()},
        "extra": extra or {},
    }


def save_checkpoint(params: ModelParams, path, extra: dict | None = None) -> None:
    # repr-exact floats and sorted keys make the file a pure function of params
    with open(path, "w") as fh:
        json.dump(checkpoint_dict(params, extra), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_checkpoint(path) -> tuple[ModelParams, dict]:
    with open(path) as fh:
        blob = json.load(fh)
    if blob.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
    config = ModelConfig(**blob["config"])
    tensors = {name: np.array(t["data"], dtype=np.float64).reshape(t["shape"])
               for name, t in blob["tensors"].items()}
    return ModelParams(config, tensors), blob.get("extra", {})
