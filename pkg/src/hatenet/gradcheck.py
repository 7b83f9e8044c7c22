"""Finite-difference verification of every differentiable operation and
of the full topologies.

Each registered check builds a scalarized random loss over small random
tensors, runs reverse mode, and compares against central differences
coordinate by coordinate.  Inputs near max/relu/hinge kinks are rejected
and resampled so the comparison happens where the loss is smooth;
dropout is checked in eval mode only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autograd, layers, model, weaksup
from .autograd import Tensor
from .errors import NonFiniteValue

THRESHOLD = 1e-4
DEFAULT_STEP = 1e-5


@dataclass
class GradCheckReport:
    name: str
    per_tensor: dict[str, float] = field(default_factory=dict)
    threshold: float = THRESHOLD

    @property
    def max_rel_error(self) -> float:
        return max(self.per_tensor.values()) if self.per_tensor else 0.0

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.threshold

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return f"{self.name:<18} max_rel_err {self.max_rel_error:.3e}  {status}"


def _rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def compare(loss_fn, tensors: dict[str, Tensor], h: float = DEFAULT_STEP) -> dict[str, float]:
    """Max relative error between reverse-mode and central-difference
    gradients, per named tensor."""
    loss = loss_fn()
    if not np.isfinite(loss.data):
        raise NonFiniteValue("loss is not finite")
    loss.backward()
    analytic = {name: t.grad.copy() for name, t in tensors.items()}
    errors = {}
    for name, tensor in tensors.items():
        flat = tensor.data.reshape(-1)
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + h
            up = loss_fn().data.item()
            flat[i] = saved - h
            down = loss_fn().data.item()
            flat[i] = saved
            numeric[i] = (up - down) / (2.0 * h)
        if not np.all(np.isfinite(numeric)):
            raise NonFiniteValue(f"non-finite finite-difference value in {name}")
        errors[name] = _rel_error(analytic[name].reshape(-1), numeric)
    return errors


def _rand(rng, *shape) -> Tensor:
    return Tensor(rng.standard_normal(shape))


def _loss_weights(rng, n) -> np.ndarray:
    return rng.standard_normal(n)


# -- per-operation checks -------------------------------------------------


def _check_fc(seed: int, h: float, activation) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    for _ in range(50):
        x, w, b = _rand(rng, 4), _rand(rng, 3, 4), _rand(rng, 3)
        pre = w.data @ x.data + b.data
        if activation != "relu" or np.all(np.abs(pre) > 1e-2):
            break
    lw = _loss_weights(rng, 3)
    tensors = {"x": x, "weight": w, "bias": b}
    return compare(
        lambda: (layers.fc_forward(x, w, b, activation) * lw).sum(), tensors, h
    )


def _check_conv1d(seed: int, h: float) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    x, f, b = _rand(rng, 3, 7), _rand(rng, 2, 3, 3), _rand(rng, 2)
    lw = _loss_weights(rng, 2 * 7)
    tensors = {"x": x, "filters": f, "bias": b}
    return compare(
        lambda: (autograd.conv1d(x, f, b, pad=1).reshape(-1) * lw).sum(), tensors, h
    )


def _windows_well_separated(data: np.ndarray, rate: int, margin: float) -> bool:
    c, t = data.shape
    t_out = t // rate
    win = data[:, : t_out * rate].reshape(c, t_out, rate)
    top2 = np.sort(win, axis=2)[:, :, -2:]
    return bool(np.all(top2[:, :, 1] - top2[:, :, 0] > margin))


def _check_maxpool(seed: int, h: float) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    for _ in range(100):
        x = _rand(rng, 2, 12)
        if _windows_well_separated(x.data, 3, 20 * h):
            break
    lw = _loss_weights(rng, 2 * 4)
    return compare(
        lambda: (autograd.maxpool1d(x, 3).reshape(-1) * lw).sum(), {"x": x}, h
    )


def _check_global_maxpool(seed: int, h: float) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    for _ in range(100):
        x = _rand(rng, 5, 4)
        top2 = np.sort(x.data, axis=0)[-2:, :]
        if np.all(top2[1] - top2[0] > 20 * h):
            break
    lw = _loss_weights(rng, 4)
    return compare(
        lambda: (autograd.global_maxpool(x) * lw).sum(), {"x": x}, h
    )


def _check_dropout_eval(seed: int, h: float) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    x = _rand(rng, 6)
    lw = _loss_weights(rng, 6)
    return compare(
        lambda: (autograd.dropout(x, 0.5, False, rng) * lw).sum(), {"x": x}, h
    )


def _check_rnn(seed: int, h: float, kind: str) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    d_in, hidden, t_steps = 2, 3, 3
    init = layers.init_gru if kind == "gru" else layers.init_lstm
    params = init(rng, d_in, hidden)
    for key, tensor in params.items():
        if key.startswith("b_"):
            tensor.data[:] = rng.standard_normal(tensor.data.shape)
    x = _rand(rng, t_steps, d_in)
    lw = _loss_weights(rng, t_steps * hidden)
    run = layers.gru_forward if kind == "gru" else layers.lstm_forward
    tensors = {"x": x, **params}
    return compare(lambda: (run(x, params).reshape(-1) * lw).sum(), tensors, h)


def _check_cross_entropy(seed: int, h: float) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    logits = _rand(rng, 3)
    target = int(rng.integers(0, 3))
    return compare(
        lambda: layers.cross_entropy(logits.softmax(), target), {"logits": logits}, h
    )


def _check_weak_loss(seed: int, h: float) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    weights = weaksup.ClassWeights(rng.uniform(0.5, 3.0, size=3))
    for _ in range(200):
        logits = _rand(rng, 3)
        lo = rng.uniform(0.0, 0.6, size=3)
        hi = rng.uniform(0.0, 0.6, size=3)
        bounds = weaksup.ClassBounds(np.minimum(lo, hi), np.maximum(lo, hi) + 0.1)
        y = np.exp(logits.data - logits.data.max())
        y /= y.sum()
        margins = np.minimum(np.abs(y - bounds.lb), np.abs(y - bounds.ub))
        if np.all(margins > 1e-3):
            break
    return compare(
        lambda: weaksup.weak_loss(logits.softmax(), bounds, weights),
        {"logits": logits},
        h,
    )


def _tiny_config(variant: str, rnn_kind: str = "gru") -> model.TopologyConfig:
    return model.TopologyConfig(
        variant=variant,
        rnn_kind=rnn_kind,
        seq_len=8,
        emb_dim=6,
        conv_filters=2,
        conv_width=3,
        conv_pad=1,
        pool_rate=2,
        rnn_hidden=5,
        fc_hidden=4,
    )


def _topology_margins_ok(params, config, values, h: float) -> bool:
    """Reject inputs whose pooled windows or relu preactivations sit on a kink."""
    x = Tensor(values)
    planes = x.transpose() if config.conv_axis == "sequence" else x
    fp = params.feature.params
    convolved = autograd.conv1d(planes, fp["conv_w"], fp["conv_b"], config.conv_pad)
    if not _windows_well_separated(convolved.data, config.pool_rate, 20 * h):
        return False
    pooled = autograd.maxpool1d(convolved, config.pool_rate)
    if config.variant == model.CNN_RNN_FC:
        run = layers.gru_forward if config.rnn_kind == "gru" else layers.lstm_forward
        states = run(pooled.transpose(), fp)
        top2 = np.sort(states.data, axis=0)[-2:, :]
        # recurrent states drift slowly, so give the pooling argmax a wide berth
        if states.data.shape[0] > 1 and not np.all(top2[1] - top2[0] > 50 * h):
            return False
        features = autograd.global_maxpool(states)
    else:
        features = pooled.reshape(-1)
    cp = params.classifier.params
    pre = cp["fc1_w"].data @ features.data + cp["fc1_b"].data
    return bool(np.all(np.abs(pre) > 20 * h))


def _check_topology(seed: int, h: float, variant: str, rnn_kind: str = "gru") -> dict[str, float]:
    config = _tiny_config(variant, rnn_kind)
    rng = np.random.default_rng(seed)
    params = model.build(config, seed)
    for _ in range(100):
        values = rng.standard_normal((config.seq_len, config.emb_dim))
        if _topology_margins_ok(params, config, values, h):
            break
    lw = _loss_weights(rng, config.n_classes)
    tensors = params.named_tensors()
    return compare(
        lambda: (model.forward(params, config, values) * lw).sum(), tensors, h
    )


REGISTRY = {
    "fc_none": lambda seed, h: _check_fc(seed, h, None),
    "fc_relu": lambda seed, h: _check_fc(seed, h, "relu"),
    "fc_softmax": lambda seed, h: _check_fc(seed, h, "softmax"),
    "conv1d": _check_conv1d,
    "maxpool1d": _check_maxpool,
    "global_maxpool": _check_global_maxpool,
    "dropout": _check_dropout_eval,
    "gru": lambda seed, h: _check_rnn(seed, h, "gru"),
    "lstm": lambda seed, h: _check_rnn(seed, h, "lstm"),
    "cross_entropy": _check_cross_entropy,
    "weak_loss": _check_weak_loss,
    "topology_cnn_rnn_gru": lambda seed, h: _check_topology(seed, h, model.CNN_RNN_FC, "gru"),
    "topology_cnn_rnn_lstm": lambda seed, h: _check_topology(seed, h, model.CNN_RNN_FC, "lstm"),
    "topology_cnn_fc": lambda seed, h: _check_topology(seed, h, model.CNN_FC),
}

# Every differentiable operation must keep a registered check; run_all
# refuses to start if one goes missing.
REQUIRED_CHECKS = (
    "fc_none",
    "fc_relu",
    "fc_softmax",
    "conv1d",
    "maxpool1d",
    "global_maxpool",
    "dropout",
    "gru",
    "lstm",
    "cross_entropy",
    "weak_loss",
    "topology_cnn_rnn_gru",
    "topology_cnn_rnn_lstm",
    "topology_cnn_fc",
)

_TOPOLOGY_TRIALS = 3


def check(name: str, seed: int = 0, h: float = DEFAULT_STEP, trials: int = 20) -> GradCheckReport:
    """Run one registered check over several random seeds; report the
    worst per-tensor relative error."""
    if name not in REGISTRY:
        raise KeyError(f"no gradient check registered under {name!r}")
    if name.startswith("topology_"):
        trials = min(trials, _TOPOLOGY_TRIALS)
    report = GradCheckReport(name)
    for trial in range(trials):
        errors = REGISTRY[name](seed + 1000 * trial, h)
        for tensor_name, err in errors.items():
            key = tensor_name
            report.per_tensor[key] = max(report.per_tensor.get(key, 0.0), err)
    return report


def run_all(seed: int = 0, h: float = DEFAULT_STEP, trials: int = 20) -> list[GradCheckReport]:
    missing = [name for name in REQUIRED_CHECKS if name not in REGISTRY]
    if missing:
        raise KeyError(f"missing registered gradient checks: {missing}")
    return [check(name, seed, h, trials) for name in REQUIRED_CHECKS]
