"""Single-layer LSTM regressor with a scalar dense head, trained by Adam.

The model maps a lookback window of scaled scalars to the next scaled value.
Gates follow the standard formulation: forget/input/output gates through a
logistic sigmoid, candidate cell state through tanh, new cell state
``i * c_tilde + f * c_prev``, hidden state ``o * tanh(c)``.  Gradients are
computed analytically by backpropagation through time (the test suite checks
them against central finite differences).

During training an inverted-dropout mask is applied to the final hidden
state only, and an L2 penalty is applied to the input kernels and dense
weights (not the recurrent matrices or biases).  All arithmetic is float64.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ._rng import substream
from .errors import DivergenceError, ValidationError

PARAM_NAMES = (
    "w_f", "w_i", "w_o", "w_c",
    "u_f", "u_i", "u_o", "u_c",
    "b_f", "b_i", "b_o", "b_c",
    "dense_w", "dense_b",
)
# weights the "kernel regularizer" (L2) applies to
KERNEL_NAMES = ("w_f", "w_i", "w_o", "w_c", "dense_w")

MODEL_FORMAT = "bootband-lstm"
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters (defaults follow the reference experiment)."""

    lookback: int = 5
    batch_size: int = 15
    epochs: int = 19
    dropout_rate: float = 0.2
    l2_coeff: float = 1e-4
    hidden_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if min(self.lookback, self.batch_size, self.epochs, self.hidden_size) < 1:
            raise ValidationError("lookback, batch_size, epochs, hidden_size must be >= 1")
        if not 0 <= self.dropout_rate < 1:
            raise ValidationError("dropout_rate must lie in [0, 1)")
        if self.l2_coeff < 0:
            raise ValidationError("l2_coeff must be >= 0")


@dataclass
class LstmParams:
    """All weights: per-gate input kernels w_*, recurrent matrices u_*, biases b_*,
    plus the dense head (dense_w, dense_b).  Input size is fixed at 1, so the
    kernels are stored as (hidden,) vectors."""

    w_f: np.ndarray
    w_i: np.ndarray
    w_o: np.ndarray
    w_c: np.ndarray
    u_f: np.ndarray
    u_i: np.ndarray
    u_o: np.ndarray
    u_c: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray
    dense_w: np.ndarray
    dense_b: np.ndarray

    @property
    def hidden_size(self) -> int:
        return self.w_f.shape[0]

    def as_dict(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    @classmethod
    def from_dict(cls, d: dict[str, np.ndarray]) -> "LstmParams":
        return cls(**{name: np.asarray(d[name], dtype=np.float64) for name in PARAM_NAMES})


@dataclass(frozen=True)
class LstmState:
    """Hidden and cell vectors carried between steps."""

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_size: int) -> "LstmState":
        return cls(h=np.zeros(hidden_size), c=np.zeros(hidden_size))


def init_params(hidden_size: int, rng: np.random.Generator) -> LstmParams:
    """Uniform(+-1/sqrt(hidden)) matrices, zero biases, forget-gate bias +1."""
    bound = 1.0 / np.sqrt(hidden_size)

    def u(*shape):
        return rng.uniform(-bound, bound, size=shape)

    params = LstmParams(
        w_f=u(hidden_size), w_i=u(hidden_size), w_o=u(hidden_size), w_c=u(hidden_size),
        u_f=u(hidden_size, hidden_size), u_i=u(hidden_size, hidden_size),
        u_o=u(hidden_size, hidden_size), u_c=u(hidden_size, hidden_size),
        b_f=np.ones(hidden_size), b_i=np.zeros(hidden_size),
        b_o=np.zeros(hidden_size), b_c=np.zeros(hidden_size),
        dense_w=u(hidden_size), dense_b=np.zeros(()),
    )
    return params


def _sigmoid(a: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


def cell_step(params: LstmParams, state: LstmState, x_t: float) -> tuple[LstmState, dict]:
    """One LSTM cell update for a single scalar input.

    Returns the new state and the gate activations needed for backprop.
    """
    h_prev, c_prev = state.h, state.c
    f = _sigmoid(params.w_f * x_t + params.u_f @ h_prev + params.b_f)
    i = _sigmoid(params.w_i * x_t + params.u_i @ h_prev + params.b_i)
    o = _sigmoid(params.w_o * x_t + params.u_o @ h_prev + params.b_o)
    c_tilde = np.tanh(params.w_c * x_t + params.u_c @ h_prev + params.b_c)
    c = i * c_tilde + f * c_prev
    tanh_c = np.tanh(c)
    h = o * tanh_c
    cache = {
        "x": x_t, "h_prev": h_prev, "c_prev": c_prev,
        "f": f, "i": i, "o": o, "c_tilde": c_tilde, "c": c, "tanh_c": tanh_c,
    }
    return LstmState(h=h, c=c), cache


@dataclass
class ForwardCache:
    """Per-step activations of a batched forward pass, for backprop."""

    steps: list[dict]
    h_final: np.ndarray
    masks: np.ndarray | None
    h_dropped: np.ndarray
    preds: np.ndarray


def _forward_pass(
    params: LstmParams, windows: np.ndarray, masks: np.ndarray | None
) -> tuple[np.ndarray, ForwardCache]:
    """Unroll the cell over a (batch, lookback) window matrix from zero state."""
    windows = np.atleast_2d(np.asarray(windows, dtype=np.float64))
    batch, _ = windows.shape
    hidden = params.hidden_size
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    steps = []
    for t in range(windows.shape[1]):
        x_t = windows[:, t]
        f = _sigmoid(x_t[:, None] * params.w_f + h @ params.u_f.T + params.b_f)
        i = _sigmoid(x_t[:, None] * params.w_i + h @ params.u_i.T + params.b_i)
        o = _sigmoid(x_t[:, None] * params.w_o + h @ params.u_o.T + params.b_o)
        c_tilde = np.tanh(x_t[:, None] * params.w_c + h @ params.u_c.T + params.b_c)
        c_new = i * c_tilde + f * c
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        steps.append(
            {"x": x_t, "h_prev": h, "c_prev": c,
             "f": f, "i": i, "o": o, "c_tilde": c_tilde, "tanh_c": tanh_c}
        )
        h, c = h_new, c_new
    h_dropped = h if masks is None else h * masks
    preds = h_dropped @ params.dense_w + params.dense_b
    cache = ForwardCache(steps=steps, h_final=h, masks=masks, h_dropped=h_dropped, preds=preds)
    return preds, cache


def forward(
    params: LstmParams, window, dropout_mask: np.ndarray | None = None
) -> tuple[float, ForwardCache]:
    """Predict the next value from one lookback window (mask only during training)."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1:
        raise ValidationError("forward expects a single 1-d window")
    masks = None if dropout_mask is None else np.atleast_2d(dropout_mask)
    preds, cache = _forward_pass(params, window[None, :], masks)
    return float(preds[0]), cache


def loss(
    params: LstmParams,
    windows: np.ndarray,
    targets: np.ndarray,
    l2_coeff: float = 0.0,
    masks: np.ndarray | None = None,
) -> float:
    """Mean squared error plus the kernel L2 penalty."""
    targets = np.atleast_1d(np.asarray(targets, dtype=np.float64))
    if targets.size == 0:
        raise ValidationError("empty batch")
    preds, _ = _forward_pass(params, windows, masks)
    value = float(np.mean((preds - targets) ** 2))
    if l2_coeff:
        value += l2_coeff * sum(float(np.sum(getattr(params, k) ** 2)) for k in KERNEL_NAMES)
    return value


def backward(
    params: LstmParams,
    windows: np.ndarray,
    targets: np.ndarray,
    cache: ForwardCache,
    l2_coeff: float = 0.0,
) -> dict[str, np.ndarray]:
    """Exact gradients of :func:`loss` for every parameter, via BPTT."""
    targets = np.atleast_1d(np.asarray(targets, dtype=np.float64))
    batch = targets.size
    grads = {name: np.zeros_like(getattr(params, name)) for name in PARAM_NAMES}

    dpred = 2.0 * (cache.preds - targets) / batch
    grads["dense_w"] = cache.h_dropped.T @ dpred
    grads["dense_b"] = np.asarray(dpred.sum())
    dh = dpred[:, None] * params.dense_w
    if cache.masks is not None:
        dh = dh * cache.masks
    dc_carry = np.zeros((batch, params.hidden_size))

    for step in reversed(cache.steps):
        f, i, o = step["f"], step["i"], step["o"]
        c_tilde, tanh_c = step["c_tilde"], step["tanh_c"]
        do = dh * tanh_c
        dc = dh * o * (1.0 - tanh_c**2) + dc_carry
        da_f = dc * step["c_prev"] * f * (1.0 - f)
        da_i = dc * c_tilde * i * (1.0 - i)
        da_o = do * o * (1.0 - o)
        da_c = dc * i * (1.0 - c_tilde**2)
        x_col = step["x"][:, None]
        for gate, da in (("f", da_f), ("i", da_i), ("o", da_o), ("c", da_c)):
            grads[f"w_{gate}"] += (da * x_col).sum(axis=0)
            grads[f"u_{gate}"] += da.T @ step["h_prev"]
            grads[f"b_{gate}"] += da.sum(axis=0)
        dh = (
            da_f @ params.u_f + da_i @ params.u_i + da_o @ params.u_o + da_c @ params.u_c
        )
        dc_carry = dc * f

    if l2_coeff:
        for name in KERNEL_NAMES:
            grads[name] = grads[name] + 2.0 * l2_coeff * getattr(params, name)
    return grads


@dataclass
class AdamState:
    """First and second moment accumulators, keyed like the parameters."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]

    @classmethod
    def zeros(cls, params: LstmParams) -> "AdamState":
        return cls(
            m={k: np.zeros_like(a) for k, a in params.as_dict().items()},
            v={k: np.zeros_like(a) for k, a in params.as_dict().items()},
        )


def adam_step(
    params: LstmParams,
    grads: dict[str, np.ndarray],
    opt_state: AdamState,
    step_index: int,
    *,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[LstmParams, AdamState]:
    """Bias-corrected Adam update; ``step_index`` is 1-based."""
    if step_index < 1:
        raise ValidationError("step_index is 1-based")
    new_p, new_m, new_v = {}, {}, {}
    for name, p in params.as_dict().items():
        g = grads[name]
        m = beta1 * opt_state.m[name] + (1.0 - beta1) * g
        v = beta2 * opt_state.v[name] + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**step_index)
        v_hat = v / (1.0 - beta2**step_index)
        new_p[name] = p - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[name], new_v[name] = m, v
    return LstmParams.from_dict(new_p), AdamState(m=new_m, v=new_v)


@dataclass
class LstmModel:
    """A trained network: weights, the config that produced them, optimizer state."""

    params: LstmParams
    cfg: TrainConfig
    opt_state: AdamState


def make_windows(series: np.ndarray, lookback: int) -> tuple[np.ndarray, np.ndarray]:
    """Slide a lookback window over the series: (windows, next values)."""
    series = np.asarray(series, dtype=np.float64)
    if series.size <= lookback:
        raise ValidationError(f"series length {series.size} must exceed lookback {lookback}")
    windows = np.lib.stride_tricks.sliding_window_view(series, lookback)[:-1]
    return np.ascontiguousarray(windows), series[lookback:]


def fit(series, cfg: TrainConfig) -> tuple[LstmModel, list[float]]:
    """Train on a scaled series; returns the model and per-epoch training RMSE
    (scaled space, computed in inference mode after each epoch)."""
    series = np.asarray(series, dtype=np.float64)
    windows, targets = make_windows(series, cfg.lookback)
    n_pairs = targets.size
    rng = substream(cfg.seed, 0)
    params = init_params(cfg.hidden_size, rng)
    opt_state = AdamState.zeros(params)
    step = 0
    rmse_trace: list[float] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_pairs)
        for b, start in enumerate(range(0, n_pairs, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            w, y = windows[idx], targets[idx]
            masks = None
            if cfg.dropout_rate > 0:
                keep = rng.random((idx.size, cfg.hidden_size)) >= cfg.dropout_rate
                masks = keep / (1.0 - cfg.dropout_rate)
            preds, cache = _forward_pass(params, w, masks)
            batch_loss = float(np.mean((preds - y) ** 2))
            if cfg.l2_coeff:
                batch_loss += cfg.l2_coeff * sum(
                    float(np.sum(getattr(params, k) ** 2)) for k in KERNEL_NAMES
                )
            if not np.isfinite(batch_loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, batch {b}", epoch=epoch, batch=b
                )
            grads = backward(params, w, y, cache, cfg.l2_coeff)
            step += 1
            params, opt_state = adam_step(
                params, grads, opt_state, step,
                lr=cfg.learning_rate, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps,
            )
        epoch_preds, _ = _forward_pass(params, windows, None)
        rmse_trace.append(float(np.sqrt(np.mean((epoch_preds - targets) ** 2))))
    return LstmModel(params=params, cfg=cfg, opt_state=opt_state), rmse_trace


def predict_series(model: LstmModel, context, positions) -> np.ndarray:
    """One-step-ahead predictions at the given positions of ``context``.

    Each position ``p`` is predicted from the actual history
    ``context[p - lookback : p]`` (no recursion); inference mode, no dropout.
    """
    context = np.asarray(context, dtype=np.float64)
    positions = np.asarray(positions, dtype=np.intp)
    if positions.size == 0:
        return np.empty(0)
    lookback = model.cfg.lookback
    if positions.min() < lookback or positions.max() > context.size:
        raise ValidationError(
            f"positions must lie in [{lookback}, {context.size}] to have full history"
        )
    windows = np.stack([context[p - lookback : p] for p in positions])
    preds, _ = _forward_pass(model.params, windows, None)
    return preds


def save_model(model: LstmModel, path: str | Path) -> None:
    """Write weights as a versioned JSON document (shape + row-major values per field)."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "config": asdict(model.cfg),
        "params": {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in model.params.as_dict().items()
        },
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> LstmModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_FORMAT_VERSION:
        raise ValidationError(f"{path}: not a version-{MODEL_FORMAT_VERSION} {MODEL_FORMAT} file")
    params = LstmParams.from_dict(
        {
            name: np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
            for name, entry in doc["params"].items()
        }
    )
    cfg = TrainConfig(**doc["config"])
    return LstmModel(params=params, cfg=cfg, opt_state=AdamState.zeros(params))
