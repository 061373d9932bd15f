"""
Minimal dense network with tape-based reverse-mode gradients.

Tensors are float64 numpy arrays. A forward pass records one cache per layer
on a :class:`Tape`; :meth:`Model.backward` walks the tape in reverse and
fills ``layer.grads`` for every key in ``layer.params``.

>>> m = Model([Dense(2, 2)])
>>> m.layers[0].params["W"][...] = np.eye(2)
>>> out, _ = m.forward(np.array([[3.0, 4.0]]))
>>> out.tolist()
[[3.0, 4.0]]
"""

from __future__ import annotations

import numpy as np

from . import activations as A


class ShapeError(ValueError):
    pass


class StateError(RuntimeError):
    pass


TRAIN, EVAL = "train", "eval"


def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` (params broadcast over leading axes)."""
    if g.shape == tuple(shape):
        return g
    if len(shape) == 0:
        return np.asarray(g.sum())
    return g.reshape(-1, *shape).sum(axis=0)


class Layer:
    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def zero_grad(self):
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def forward(self, x, mode, rng):
        raise NotImplementedError

    def backward(self, dout, cache):
        raise NotImplementedError


class Dense(Layer):
    kind = "dense"

    def __init__(self, n_in: int, n_out: int, W=None, b=None):
        super().__init__()
        self.n_in, self.n_out = n_in, n_out
        self.params["W"] = np.zeros((n_in, n_out)) if W is None else np.array(W, dtype=np.float64).reshape(n_in, n_out)
        self.params["b"] = np.zeros(n_out) if b is None else np.array(b, dtype=np.float64).reshape(n_out)
        self.zero_grad()

    def forward(self, x, mode, rng):
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ShapeError(f"Dense({self.n_in},{self.n_out}) got input of shape {x.shape}")
        return x @ self.params["W"] + self.params["b"], x

    def backward(self, dout, x, need_dx=True):
        gW = self.grads.get("W")
        if gW is None or gW.shape != self.params["W"].shape:
            gW = self.grads["W"] = np.empty_like(self.params["W"])
        np.matmul(x.T, dout, out=gW)
        self.grads["b"] = dout.sum(axis=0)
        return dout @ self.params["W"].T if need_dx else None

    def __repr__(self):
        return f"Dense({self.n_in}, {self.n_out})"


class Act(Layer):
    """Elementwise activation. Trainable activation params are exposed as
    layer params (the same array objects, so updates land on ``act``)."""

    kind = "act"

    def __init__(self, act: A.Activation):
        super().__init__()
        self.act = act
        for k in act.trainable_names():
            self.params[k] = act.params[k]
        self.zero_grad()

    def forward(self, z, mode, rng):
        noise = None
        if self.act.kind is A.Kind.RRELU and self.act.fixed.get("stochastic") and mode == TRAIN:
            noise = A.rrelu_noise(self.act, z.shape, rng)
        return A.evaluate(self.act, z, noise), (z, noise)

    def backward(self, dout, cache):
        z, noise = cache
        if not self.params:
            return dout * A.eval_dx(self.act, z, noise)
        if self.act.kind is A.Kind.SRS:
            # input already validated in forward
            dx, da, db = A.srs_grads(self.act, z, check=False)
            if "alpha" in self.params:
                self.grads["alpha"] = np.asarray(np.vdot(dout, da))
            if "beta" in self.params:
                self.grads["beta"] = np.asarray(np.vdot(dout, db))
            return dout * dx
        dx, d = A.eval_grads(self.act, z, noise)
        names = self.act.param_names
        for k in self.params:
            i = names.index(k)
            self.grads[k] = _unbroadcast(dout * d[..., i], self.params[k].shape)
        return dout * dx

    def __repr__(self):
        return f"Act({self.act.name})"


def batchnorm_forward(x, gamma, beta_bn, state: dict, mode: str, eps: float = 1e-5):
    """Batch normalization over axis 0.

    Train mode uses batch statistics and updates ``state['running_mean']`` /
    ``state['running_var']`` in place with ``state['momentum']`` (the running
    variance uses the unbiased batch variance). Eval mode uses the running
    statistics. Returns ``(y, cache)``.
    """
    if x.shape[1:] != gamma.shape or gamma.shape != beta_bn.shape:
        raise ShapeError(f"batchnorm features {gamma.shape} do not match input {x.shape}")
    if mode == TRAIN:
        B = x.shape[0]
        if B < 2:
            raise ShapeError("train-mode batchnorm needs a batch of at least 2")
        if np.all(x == x[0]):
            raise ShapeError("train-mode batchnorm got a constant batch (zero variance)")
        mu = x.mean(axis=0)
        var = x.var(axis=0)
        m = state.get("momentum", 0.1)
        state["running_mean"] *= 1 - m
        state["running_mean"] += m * mu
        state["running_var"] *= 1 - m
        state["running_var"] += m * var * B / (B - 1)
    else:
        mu, var = state["running_mean"], state["running_var"]
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv
    return gamma * xhat + beta_bn, (xhat, inv, mode)


class BatchNorm(Layer):
    kind = "batchnorm"

    def __init__(self, features: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.features = features
        self.eps = eps
        self.params["gamma"] = np.ones(features)
        self.params["beta"] = np.zeros(features)
        self.state = {
            "running_mean": np.zeros(features),
            "running_var": np.ones(features),
            "momentum": momentum,
        }
        self.zero_grad()

    def forward(self, x, mode, rng):
        return batchnorm_forward(x, self.params["gamma"], self.params["beta"], self.state, mode, self.eps)

    def backward(self, dout, cache):
        xhat, inv, mode = cache
        g = self.params["gamma"]
        self.grads["gamma"] = (dout * xhat).sum(axis=0)
        self.grads["beta"] = dout.sum(axis=0)
        dxhat = dout * g
        if mode != TRAIN:
            return dxhat * inv
        return inv * (dxhat - dxhat.mean(axis=0) - xhat * (dxhat * xhat).mean(axis=0))

    def __repr__(self):
        return f"BatchNorm({self.features})"


class Dropout(Layer):
    """Inverted dropout: retained units are scaled by 1/(1-rate) in train mode."""

    kind = "dropout"

    def __init__(self, rate: float = 0.5):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        self.rate = rate

    def forward(self, x, mode, rng):
        if mode != TRAIN or self.rate == 0.0:
            return x, None
        mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * mask, mask

    def backward(self, dout, mask):
        return dout if mask is None else dout * mask

    def __repr__(self):
        return f"Dropout({self.rate})"


class Tape:
    def __init__(self, mode):
        self.mode = mode
        self.inputs: list[np.ndarray] = []
        self.outputs: list[np.ndarray] = []
        self.caches: list = []


class Model:
    def __init__(self, layers, mode: str = TRAIN):
        self.layers = list(layers)
        self.mode = mode

    def train(self):
        self.mode = TRAIN
        return self

    def eval(self):
        self.mode = EVAL
        return self

    def forward(self, batch, seed: int = 0):
        """Run the network; stochastic layers draw from ``default_rng(seed)``."""
        x = np.asarray(batch, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] < 1:
            raise ShapeError(f"batch must have shape (B, features), got {x.shape}")
        rng = np.random.default_rng(seed)
        tape = Tape(self.mode)
        for layer in self.layers:
            tape.inputs.append(x)
            x, cache = layer.forward(x, self.mode, rng)
            tape.caches.append(cache)
            tape.outputs.append(x)
        return x, tape

    def __call__(self, batch, seed: int = 0):
        return self.forward(batch, seed)[0]

    def backward(self, tape, dout, need_input_grad: bool = True):
        if not isinstance(tape, Tape) or len(tape.caches) != len(self.layers):
            raise StateError("backward called without a matching forward pass")
        g = np.asarray(dout, dtype=np.float64)
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            if i == 0 and not need_input_grad and isinstance(layer, Dense):
                return layer.backward(g, tape.caches[i], need_dx=False)
            g = layer.backward(g, tape.caches[i])
        return g

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()

    def named_params(self):
        """Yield ``(name, layer, key, array)`` for every parameter."""
        for i, layer in enumerate(self.layers):
            for k, v in layer.params.items():
                yield f"{i}.{layer.kind}.{k}", layer, k, v

    def act_layers(self):
        return [l for l in self.layers if isinstance(l, Act)]

    def hidden_means(self, tape, pre: bool = False):
        """Batch mean of each activation layer's output (or input if ``pre``)."""
        out = []
        for i, layer in enumerate(self.layers):
            if isinstance(layer, Act):
                t = tape.inputs[i] if pre else tape.outputs[i]
                out.append(float(t.mean()))
        return out

    def __repr__(self):
        return "Model([" + ", ".join(map(repr, self.layers)) + "])"


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy and its gradient ``(softmax - onehot) / B``."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    B, C = logits.shape
    if labels.shape != (B,):
        raise ShapeError(f"expected {B} labels, got shape {labels.shape}")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= C:
        raise ValueError(f"labels must lie in [0, {C})")
    z = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    logp = z - lse[:, None]
    loss = -logp[np.arange(B), labels].mean()
    d = np.exp(logp)
    d[np.arange(B), labels] -= 1.0
    return float(loss), d / B


def mlp(sizes, act_factory, use_bn: bool = False, dropout: float = 0.0) -> Model:
    """Dense stack ``sizes[0] -> ... -> sizes[-1]``; each hidden Dense is
    followed by [BatchNorm], Act(act_factory(width)), [Dropout]."""
    layers: list[Layer] = []
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        layers.append(Dense(a, b))
        if i < len(sizes) - 2:
            if use_bn:
                layers.append(BatchNorm(b))
            layers.append(Act(act_factory(b)))
            if dropout:
                layers.append(Dropout(dropout))
    return Model(layers)


FMNIST_SIZES = (784, 512, 512, 512, 256, 10)


def activation_factory(kind, srs_init=(3.0, 2.0), clamp_floor: float = 0.01, swish_trainable=False):
    """Per-layer activation builder; SRS starts from ``srs_init`` and PReLU
    gets one slope per unit."""
    kind = A.Kind(kind) if not isinstance(kind, A.Kind) else kind

    def build(width):
        if kind is A.Kind.SRS:
            return A.srs(srs_init[0], srs_init[1], clamp_floor=clamp_floor)
        if kind is A.Kind.PRELU:
            return A.make(kind, channels=width, clamp_floor=clamp_floor)
        if kind is A.Kind.SWISH:
            return A.make(kind, trainable=swish_trainable, clamp_floor=clamp_floor)
        return A.make(kind, clamp_floor=clamp_floor)

    return build


def fmnist_mlp(kind="srs", use_bn=False, srs_init=(3.0, 2.0), sizes=FMNIST_SIZES, **kw) -> Model:
    return mlp(sizes, activation_factory(kind, srs_init, **kw), use_bn=use_bn)
