"""Mini-batch Adam training on (optionally class-weighted) binary cross-entropy."""

from __future__ import annotations

import logging
import os
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from g4attn.errors import DataError, G4AttnError
from g4attn.nn import FULL, ModelConfig, ModelParams, backward, forward, init_params

log = logging.getLogger(__name__)

CLAMP = 1e-12
# examples per forward/backward call; bounds trace memory, not the batch size
CHUNK = 128


class TrainingError(G4AttnError):
    pass


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 10
    batch_size: int = 1024
    seed: int = 123
    input_length: int = 124
    class_weighting: bool = False
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    variant: str = FULL
    kernel_size: int = 11
    n_filters: int = 64
    lstm_units: int = 128
    dense_units: int = 64

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def model_config(self) -> ModelConfig:
        return ModelConfig(self.kernel_size, self.n_filters, self.lstm_units,
                           self.dense_units, self.variant, self.input_length)

    @classmethod
    def from_text(cls, text: str) -> TrainConfig:
        """Parse ``key = value`` lines; ``#`` starts a comment."""
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (s.strip() for s in line.partition("="))
            if not sep or key not in types:
                raise DataError(f"config line {lineno}: unknown or malformed entry {raw!r}")
            kind = types[key]
            if kind in ("bool", bool):
                if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise DataError(f"config line {lineno}: {key} needs a boolean")
                values[key] = value.lower() in ("true", "1", "yes")
            else:
                conv = {"int": int, "float": float, "str": str}.get(kind, kind)
                try:
                    values[key] = conv(value)
                except ValueError:
                    raise DataError(f"config line {lineno}: bad value for {key}") from None
        return cls(**values)

    @classmethod
    def from_file(cls, path) -> TrainConfig:
        with open(path) as fh:
            return cls.from_text(fh.read())

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in asdict(self).items())


@dataclass(frozen=True)
class ClassWeights:
    w_pos: float = 1.0
    w_neg: float = 1.0


def compute_class_weights(n_pos: int, n_neg: int) -> ClassWeights:
    """``|D| / (|C| * count)`` per class with two classes."""
    if n_pos <= 0 or n_neg <= 0:
        raise DataError("class weights need at least one example of each class")
    total = n_pos + n_neg
    return ClassWeights(total / (2 * n_pos), total / (2 * n_neg))


def bce_loss(Y, t, weights: ClassWeights | None = None):
    """Mean (weighted) binary cross-entropy and its gradient w.r.t. ``Y``."""
    Y = np.asarray(Y, dtype=np.float64)
    t = np.asarray(t)
    if Y.size == 0:
        raise DataError("empty batch")
    if not np.isin(t, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    t = t.astype(np.float64)
    w = weights or ClassWeights()
    Yc = np.clip(Y, CLAMP, 1.0 - CLAMP)
    B = Y.size
    loss = -float(np.sum(w.w_pos * t * np.log(Yc) + w.w_neg * (1 - t) * np.log1p(-Yc))) / B
    grad = -(w.w_pos * t / Yc - w.w_neg * (1 - t) / (1 - Yc)) / B
    return loss, grad


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: ModelParams) -> AdamState:
        return cls({k: np.zeros_like(t) for k, t in params.tensors.items()},
                   {k: np.zeros_like(t) for k, t in params.tensors.items()})


def adam_step(params: ModelParams, grads: dict[str, np.ndarray], state: AdamState,
              config: TrainConfig):
    """Bias-corrected Adam update, in place. Returns ``(params, state)``."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient in {name} at step {state.step + 1}")
    state.step += 1
    b1, b2 = config.beta1, config.beta2
    bc1 = 1.0 - b1 ** state.step
    bc2 = 1.0 - b2 ** state.step
    for name, theta in params.tensors.items():
        g = grads[name]
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        theta -= config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + config.epsilon)
    return params, state


def batch_gradient(params: ModelParams, X, y, weights: ClassWeights | None = None):
    """Loss and summed gradients for one mini-batch, accumulated chunk by chunk
    in a fixed order."""
    B = len(y)
    total = 0.0
    grads = None
    for i in range(0, B, CHUNK):
        Yc, trace = forward(X[i:i + CHUNK], params)
        loss, dY = bce_loss(Yc, y[i:i + CHUNK], weights)
        frac = len(Yc) / B
        total += loss * frac
        g = backward(trace, dY * frac, params)
        if grads is None:
            grads = g
        else:
            for k in grads:
                grads[k] += g[k]
    return total, grads


@dataclass
class TrainLog:
    epoch_loss: list[float] = field(default_factory=list)
    step_loss: list[float] = field(default_factory=list)
    class_weights: ClassWeights | None = None


def fit(X: np.ndarray, y: np.ndarray, config: TrainConfig,
        params: ModelParams | None = None) -> tuple[ModelParams, TrainLog]:
    """Train on already-encoded inputs ``X`` (N, L, 4) with labels ``y``."""
    y = np.asarray(y)
    if len(y) == 0:
        raise DataError("training set is empty")
    if X.shape[1] != config.input_length:
        raise DataError(f"inputs have length {X.shape[1]}, config says {config.input_length}")
    if params is None:
        params = init_params(config.model_config(), config.seed)
    weights = None
    if config.class_weighting:
        weights = compute_class_weights(int((y == 1).sum()), int((y == 0).sum()))
    state = AdamState.zeros_like(params)
    order_rng = np.random.default_rng([config.seed, 1])
    tlog = TrainLog(class_weights=weights)
    for epoch in range(config.epochs):
        order = order_rng.permutation(len(y))
        losses = []
        for i in range(0, len(y), config.batch_size):
            idx = order[i:i + config.batch_size]
            loss, grads = batch_gradient(params, X[idx], y[idx], weights)
            adam_step(params, grads, state, config)
            losses.append((loss, len(idx)))
            tlog.step_loss.append(loss)
        mean = sum(l * n for l, n in losses) / len(y)
        tlog.epoch_loss.append(mean)
        log.info("epoch %d/%d mean loss %.6f", epoch + 1, config.epochs, mean)
    return params, tlog


def train(dataset, config: TrainConfig) -> tuple[ModelParams, TrainLog]:
    """Encode a sequence of labeled examples (with ``bases``) and fit."""
    from g4attn.seq import encode_batch

    dataset = list(dataset)
    if not dataset:
        raise DataError("training set is empty")
    if any(e.bases is None for e in dataset):
        raise DataError("every training example needs a sequence")
    X = encode_batch([e.bases for e in dataset], config.input_length)
    y = np.array([e.label for e in dataset])
    return fit(X, y, config)


@contextmanager
def thread_limit(env: str = "G4ATTN_THREADS"):
    """Cap BLAS worker threads at ``$G4ATTN_THREADS`` when it is set."""
    value = os.environ.get(env)
    if not value:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=max(1, int(value))):
        yield
