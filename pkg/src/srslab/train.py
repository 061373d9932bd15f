"""
Training harness for the desk-scale ablations.

The default :class:`TrainConfig` is the Gaussian-init, lr 0.01, no-BN cell:
784-512-512-512-256-10 MLP, SRS started at (alpha, beta) = (3, 2), 10,000
steps of SGD on mini-batches of 50. Momentum 0.9 and weight decay 5e-4 are
borrowed from the convolutional recipe because the ablation recipe omits them.
"""

from __future__ import annotations

import dataclasses
import io
import logging
import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from . import activations as A
from .data import DatasetSplit
from .nn import Act, BatchNorm, Dense, Model, StateError, activation_factory, mlp, softmax_cross_entropy

log = logging.getLogger(__name__)

INITS = ("gaussian", "xavier", "he")
CHANCE_ACCURACY_CUTOFF = 0.15


class ConfigError(ValueError):
    pass


@dataclass
class TrainConfig:
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 5e-4
    batch_size: int = 50
    steps: int = 10_000
    init: str = "gaussian"
    sigma: float = 0.1
    use_bn: bool = False
    seed: int = 1
    srs_init: tuple = (3.0, 2.0)
    clamp_floor: float = 0.01
    activation: str = "srs"
    log_interval: int = 100
    eval_interval: int = 1000

    def validate(self):
        if not self.lr > 0:
            raise ConfigError("lr must be > 0")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.batch_size < (2 if self.use_bn else 1):
            raise ConfigError("batch_size must be >= 2 with batch norm (>= 1 otherwise)")
        if self.init not in INITS:
            raise ConfigError(f"init must be one of {INITS}, got {self.init!r}")
        if self.clamp_floor < 0:
            raise ConfigError("clamp_floor must be >= 0")
        if self.log_interval < 1 or self.eval_interval < 1:
            raise ConfigError("log/eval intervals must be >= 1")
        try:
            A.Kind(self.activation)
        except ValueError:
            raise ConfigError(f"unknown activation {self.activation!r}") from None
        a, b = self.srs_init
        if not (a > 0 and b > 0) or A.srs_pole_exists(a, b):
            raise ConfigError(f"srs_init {self.srs_init} must satisfy 0 < beta < alpha*e")
        return self

    def replace(self, **kw) -> "TrainConfig":
        return dataclasses.replace(self, **kw)


# ---------------------------------------------------------------------------
# key=value config files


def _coerce(name, typ, raw: str):
    raw = raw.strip()
    try:
        if typ == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        if typ == "tuple":
            return tuple(float(v) for v in raw.split(","))
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_kv(text: str) -> dict[str, str]:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def config_from_mapping(values: dict, base: TrainConfig | None = None) -> TrainConfig:
    base = base or TrainConfig()
    types = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
    kw = {}
    for k, v in values.items():
        key = k.replace("-", "_")
        if key not in types:
            raise ConfigError(f"unknown config key {k!r}")
        kw[key] = _coerce(k, types[key], v) if isinstance(v, str) else v
    return base.replace(**kw)


def format_kv(cfg: TrainConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(f"{x:g}" for x in v)
        lines.append(f"{f.name}={v}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# model set-up and optimisation


def build_model(cfg: TrainConfig, sizes) -> Model:
    factory = activation_factory(cfg.activation, cfg.srs_init, cfg.clamp_floor)
    return mlp(sizes, factory, use_bn=cfg.use_bn)


def init_weights(model: Model, scheme: str = "gaussian", seed: int = 0, sigma: float = 0.1,
                 srs_init=None):
    """Gaussian N(0, sigma), Xavier uniform or He normal weights; zero biases.

    BatchNorm is reset to gamma=1, beta=0 and SRS layers to ``srs_init``
    when given.
    """
    if scheme not in INITS:
        raise ConfigError(f"unknown init scheme {scheme!r}")
    rng = np.random.default_rng(seed)
    for layer in model.layers:
        if isinstance(layer, Dense):
            fan_in, fan_out = layer.params["W"].shape
            if scheme == "gaussian":
                w = rng.normal(0.0, sigma, (fan_in, fan_out))
            elif scheme == "xavier":
                bound = math.sqrt(6.0 / (fan_in + fan_out))
                w = rng.uniform(-bound, bound, (fan_in, fan_out))
            else:
                w = rng.normal(0.0, math.sqrt(2.0 / fan_in), (fan_in, fan_out))
            layer.params["W"][...] = w
            layer.params["b"][...] = 0.0
        elif isinstance(layer, BatchNorm):
            layer.params["gamma"][...] = 1.0
            layer.params["beta"][...] = 0.0
        elif isinstance(layer, Act) and srs_init is not None and layer.act.kind is A.Kind.SRS:
            layer.act.params["alpha"][...] = srs_init[0]
            layer.act.params["beta"][...] = srs_init[1]
    model.velocity = {}


def _decays(layer, key) -> bool:
    return isinstance(layer, Dense) and key == "W"


def sgd_step(model: Model, cfg: TrainConfig):
    """``v = m*v - lr*(g + wd*p); p += v`` then clamp/project activation params.

    Weight decay only touches Dense weights.
    """
    vel = getattr(model, "velocity", None)
    if vel is None:
        vel = model.velocity = {}
    for name, layer, key, p in model.named_params():
        g = layer.grads.get(key)
        if g is None or g.shape != p.shape:
            raise StateError(f"missing gradient for {name}; run backward first")
        if name not in vel:
            vel[name] = (np.zeros_like(p), np.empty_like(p))
        v, scratch = vel[name]
        v *= cfg.momentum
        np.multiply(g, cfg.lr, out=scratch)
        v -= scratch
        if cfg.weight_decay and _decays(layer, key):
            np.multiply(p, cfg.lr * cfg.weight_decay, out=scratch)
            v -= scratch
        p += v
    for layer in model.act_layers():
        layer.act.project()


# ---------------------------------------------------------------------------
# experiments


@dataclass
class MetricsLog:
    activation: str
    seed: int
    records: list = field(default_factory=list)
    final_params: list = field(default_factory=list)  # [(alpha, beta)] per SRS layer
    final_test_err: float = float("nan")
    diverged: bool = False
    n_hidden: int = 0

    @property
    def converged(self) -> bool:
        return (not self.diverged and math.isfinite(self.final_test_err)
                and 1.0 - self.final_test_err > CHANCE_ACCURACY_CUTOFF)

    def header(self) -> list[str]:
        cols = ["step", "loss", "train_acc", "test_err"]
        cols += [f"layer{i + 1}_mean" for i in range(self.n_hidden)]
        cols += [f"layer{i + 1}_premean" for i in range(self.n_hidden)]
        for i in range(len(self.final_params)):
            cols += [f"alpha_{i + 1}", f"beta_{i + 1}"]
        return cols

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.header()) + "\n")
        for r in self.records:
            vals = [r["step"], r["loss"], r["train_acc"], r["test_err"]]
            vals += r["means"] + r["premeans"]
            for a, b in r["srs"]:
                vals += [a, b]
            buf.write(",".join(_fmt(v) for v in vals) + "\n")
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.10g}"


def evaluate_error(model: Model, data: DatasetSplit, chunk: int = 2000) -> float:
    prev = model.mode
    model.eval()
    wrong = 0
    try:
        for i in range(0, len(data), chunk):
            logits, _ = model.forward(data.inputs[i:i + chunk])
            wrong += int((logits.argmax(1) != data.labels[i:i + chunk]).sum())
    finally:
        model.mode = prev
    return wrong / len(data)


def _srs_params(model):
    return [(float(l.act.params["alpha"]), float(l.act.params["beta"]))
            for l in model.act_layers() if l.act.kind is A.Kind.SRS]


def run_experiment(cfg: TrainConfig, train: DatasetSplit, test: DatasetSplit | None = None,
                   hidden=(512, 512, 512, 256), model: Model | None = None) -> MetricsLog:
    """Shuffled mini-batch SGD with metric logging.

    One record is written every ``log_interval`` steps and at the final
    step; test error is added every ``eval_interval`` steps and at the end.
    A non-finite loss or activation input stops the run and marks it
    diverged.
    """
    cfg.validate()
    test = test if test is not None else train
    sizes = (train.features, *hidden, train.n_classes)
    if model is None:
        model = build_model(cfg, sizes)
        init_weights(model, cfg.init, cfg.seed, cfg.sigma, cfg.srs_init)
    model.train()
    rng = np.random.default_rng(cfg.seed)
    logm = MetricsLog(cfg.activation, cfg.seed, n_hidden=len(model.act_layers()))
    n = len(train)
    order, pos = rng.permutation(n), 0
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, cfg.steps + 1):
            if pos + cfg.batch_size > n:
                order, pos = rng.permutation(n), 0
            idx = order[pos:pos + cfg.batch_size]
            pos += cfg.batch_size
            x, y = train.inputs[idx], train.labels[idx]
            try:
                logits, tape = model.forward(x, seed=cfg.seed * 1_000_003 + step)
                loss, dlogits = softmax_cross_entropy(logits, y)
                if not math.isfinite(loss):
                    raise FloatingPointError("non-finite loss")
                model.backward(tape, dlogits, need_input_grad=False)
                sgd_step(model, cfg)
            except (A.DomainError, FloatingPointError) as exc:
                log.info("run %s seed %d diverged at step %d: %s", cfg.activation, cfg.seed, step, exc)
                logm.diverged = True
                logm.records.append(dict(step=step, loss=float("nan"), train_acc=float("nan"),
                                         test_err=None, means=[float("nan")] * logm.n_hidden,
                                         premeans=[float("nan")] * logm.n_hidden,
                                         srs=_srs_params(model)))
                break
            last = step == cfg.steps
            if step % cfg.log_interval == 0 or last:
                test_err = None
                if step % cfg.eval_interval == 0 or last:
                    test_err = evaluate_error(model, test)
                    model.train()
                logm.records.append(dict(
                    step=step, loss=loss,
                    train_acc=float((logits.argmax(1) == y).mean()),
                    test_err=test_err,
                    means=model.hidden_means(tape),
                    premeans=model.hidden_means(tape, pre=True),
                    srs=_srs_params(model),
                ))
    logm.final_params = _srs_params(model)
    if logm.diverged:
        logm.final_test_err = float("nan")
    else:
        logm.final_test_err = logm.records[-1]["test_err"]
    logm.model = model
    return logm


# ---------------------------------------------------------------------------
# ablation tables


def cell_label(overrides: dict) -> str:
    parts = []
    for k, v in overrides.items():
        if k == "use_bn":
            parts.append("w/ BN" if v else "w/o BN")
        else:
            parts.append(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}")
    return " ".join(parts)


@dataclass
class AblationResult:
    activations: list
    cells: list  # list of override dicts
    runs: dict  # (activation, cell index) -> [MetricsLog]

    def median_error(self, act, j) -> float:
        """Median test error over seeds; non-convergent runs count as +inf."""
        errs = [r.final_test_err if r.converged else math.inf for r in self.runs[(act, j)]]
        return statistics.median(errs)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("model," + ",".join(cell_label(c) for c in self.cells) + "\n")
        for act in self.activations:
            row = []
            for j in range(len(self.cells)):
                m = self.median_error(act, j)
                row.append("-" if not math.isfinite(m) else f"{100 * m:.2f}")
            buf.write(act + "," + ",".join(row) + "\n")
        return buf.getvalue()


def grid_cells(**axes) -> list[dict]:
    """Cartesian product of override axes, e.g. ``grid_cells(lr=[.01, .1], use_bn=[False, True])``."""
    cells = [{}]
    for k, values in axes.items():
        cells = [{**c, k: v} for c in cells for v in values]
    return cells


def run_ablation(base: TrainConfig, activations, cells, train, test, seeds=(1, 2, 3),
                 hidden=(512, 512, 512, 256)) -> AblationResult:
    runs = {}
    for act in activations:
        for j, over in enumerate(cells):
            runs[(act, j)] = []
            for s in seeds:
                cfg = base.replace(activation=act, seed=s, **over)
                runs[(act, j)].append(run_experiment(cfg, train, test, hidden))
    return AblationResult(list(activations), list(cells), runs)
