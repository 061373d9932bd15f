"""Central finite-difference checks of the network's analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import activations as A
from .nn import Act, Dense, Model, activation_factory, fmnist_mlp, mlp, softmax_cross_entropy

NARROW_SIZES = (784, 16, 16, 16, 12, 10)


def rel_err(analytic, numeric, rtol=1e-5, atol=1e-7):
    """Normalized error |a - n| / max(|a|, |n|, atol / rtol).

    It is <= ``rtol`` exactly when ``|a - n| <= max(rtol * scale, atol)``,
    i.e. a relative check with an absolute floor for near-zero gradients.
    """
    a, n = np.asarray(analytic, float), np.asarray(numeric, float)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), atol / rtol)
    return np.abs(a - n) / scale


@dataclass
class CheckResult:
    name: str
    checked: int
    max_rel_err: float


def loss_fn(model: Model, x, y, seed=0):
    logits, _ = model.forward(x, seed)
    return softmax_cross_entropy(logits, y)[0]


def check_model(model: Model, x, y, seed=0, step=1e-5, limit=None, per_tensor=6, rng=None, atol=1e-7):
    """Compare backprop gradients of the mean cross-entropy to central differences.

    Parameter arrays with more than ``limit`` entries have ``per_tensor``
    coordinates sampled with ``rng``; smaller ones (and every array when
    ``limit`` is None) are checked exhaustively.
    """
    logits, tape = model.forward(x, seed)
    _, dlogits = softmax_cross_entropy(logits, y)
    model.zero_grad()
    model.backward(tape, dlogits)
    rng = rng or np.random.default_rng(0)
    out = []
    for name, layer, key, p in model.named_params():
        g = layer.grads[key].reshape(-1)
        flat = p.reshape(-1)
        if limit is not None and flat.size > limit:
            idx = rng.choice(flat.size, per_tensor, replace=False)
        else:
            idx = range(flat.size)
        worst, n = 0.0, 0
        for i in idx:
            old = flat[i]
            flat[i] = old + step
            lp = loss_fn(model, x, y, seed)
            flat[i] = old - step
            lm = loss_fn(model, x, y, seed)
            flat[i] = old
            worst = max(worst, float(rel_err(g[i], (lp - lm) / (2 * step), atol=atol)))
            n += 1
        out.append(CheckResult(name, n, worst))
    return out


def worst(results) -> float:
    return max(r.max_rel_err for r in results)


def check_activation(kind, rng, n=64, step=1e-5):
    """Gradient check of Dense(3,4) -> Act -> Dense(4,3) for one kind.

    Samples whose pre-activations fall within 1e-3 of a kink are dropped.
    """
    kind = A.Kind(kind) if not isinstance(kind, A.Kind) else kind
    if kind is A.Kind.PRELU:
        act = A.make(kind, channels=4)
    elif kind is A.Kind.SWISH:
        act = A.make(kind, trainable=True, alpha=1.3)
    else:
        act = A.make(kind)
    model = Model([Dense(3, 4), Act(act), Dense(4, 3)])
    for _, _, k, p in model.named_params():
        if k in ("W", "b"):
            p[...] = rng.normal(0, 1.0, p.shape)
    x = rng.normal(0, 1.5, (n, 3))
    pre = x @ model.layers[0].params["W"] + model.layers[0].params["b"]
    keep = np.ones(len(x), bool)
    for k0 in A.KINKS.get(kind, ()):
        keep &= np.all(np.abs(pre - k0) > 1e-3, axis=1)
    x = x[keep]
    y = rng.integers(0, 3, len(x))
    return check_model(model, x, y, step=step)


def init_gaussian(model, rng, sigma=0.1):
    for _, _, k, p in model.named_params():
        if k in ("W", "b"):
            p[...] = rng.normal(0, sigma, p.shape)


def gradient_suite(n_batches=10, batch=8, seed=0):
    """Every check behind the gradient acceptance gate; returns ``{label: worst rel err}``.

    * each activation kind inside a small network, all coordinates
    * an MLP with the fashion topology but narrow hidden layers, BN off/on;
      everything exhaustive except 100 sampled input weights
    * the full 784-512-512-512-256-10 MLP, BN off/on; 6 sampled coordinates
      per weight/bias/BN array, SRS parameters exhaustive
    """
    rng = np.random.default_rng(seed)
    report = {}
    for kind in A.ALL_KINDS:
        report[f"act:{kind.value}"] = max(worst(check_activation(kind, rng)) for _ in range(n_batches))
    for bn in (False, True):
        tag = "bn" if bn else "nobn"
        w_narrow = w_full = 0.0
        for _ in range(n_batches):
            m = mlp(NARROW_SIZES, activation_factory("srs"), use_bn=bn)
            init_gaussian(m, rng)
            x, y = rng.random((batch, 784)), rng.integers(0, 10, batch)
            w_narrow = max(w_narrow, worst(check_model(m, x, y, limit=1000, per_tensor=100, rng=rng)))
        for _ in range(n_batches):
            m = fmnist_mlp("srs", use_bn=bn)
            init_gaussian(m, rng)
            x, y = rng.random((batch, 784)), rng.integers(0, 10, batch)
            w_full = max(w_full, worst(check_model(m, x, y, limit=2, per_tensor=6, rng=rng)))
        report[f"mlp-narrow:{tag}"] = w_narrow
        report[f"mlp-full:{tag}"] = w_full
    return report
