"""
Closed-form activation functions with input and parameter derivatives.

Every kind is evaluated elementwise on numpy arrays (scalars are accepted and
returned as 0-d results). Soft-Root-Sign (SRS) is

    SRS(x) = x / (x / alpha + exp(-x / beta))

with trainable ``alpha, beta > 0``. The denominator has a real root exactly
when ``beta >= alpha * e``; such parameter pairs are rejected.

Examples
--------
>>> act = srs(5.0, 3.0)
>>> float(evaluate(act, 0.0)), float(eval_dx(act, 0.0))
(0.0, 1.0)
>>> round(srs_shape(5.0, 3.0).min_value, 5)
-1.41624
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

E = math.e
SELU_LAMBDA = 1.0507009873554804934193349852946
SELU_ALPHA = 1.6732632423543772848170429916717
# Projection keeps beta a safe margin below the pole boundary alpha * e.
POLE_MARGIN = 0.95


class ActivationError(ValueError):
    pass


class DomainError(ActivationError):
    """Raised for non-finite inputs."""


class InvalidParameterError(ActivationError):
    """Raised when parameters violate an activation's invariants."""


class Kind(enum.Enum):
    SRS = "srs"
    RELU = "relu"
    LRELU = "lrelu"
    PRELU = "prelu"
    SOFTPLUS = "softplus"
    ELU = "elu"
    SELU = "selu"
    SWISH = "swish"
    SIGMOID = "sigmoid"
    SOFTSIGN = "softsign"
    TANH = "tanh"
    HARDTANH = "hardtanh"
    MISH = "mish"
    RRELU = "rrelu"
    # test/diagnostic only
    IDENTITY = "identity"


# Points where the derivative jumps (finite-difference checks must avoid them).
KINKS = {
    Kind.RELU: (0.0,),
    Kind.LRELU: (0.0,),
    Kind.PRELU: (0.0,),
    Kind.RRELU: (0.0,),
    Kind.SELU: (0.0,),
    Kind.HARDTANH: (-1.0, 1.0),
}

BOUNDED = {Kind.SRS, Kind.SIGMOID, Kind.TANH, Kind.SOFTSIGN, Kind.HARDTANH}


@dataclass
class Activation:
    """An activation kind plus its constants and trainable parameters.

    ``params`` maps names to float arrays. Scalar parameters are 0-d arrays;
    PReLU's slope has one entry per channel and broadcasts over the last axis
    of the input. The trainer updates ``params`` in place between evaluations.
    """

    kind: Kind
    params: dict[str, np.ndarray] = field(default_factory=dict)
    fixed: dict[str, float] = field(default_factory=dict)
    trainable: dict[str, bool] = field(default_factory=dict)
    clamp_floor: float = 0.01

    def __post_init__(self):
        self.params = {k: np.array(v, dtype=np.float64) for k, v in self.params.items()}
        for k in self.params:
            self.trainable.setdefault(k, True)
        self.validate()

    @property
    def param_names(self) -> list[str]:
        return list(self.params)

    @property
    def name(self) -> str:
        return self.kind.value

    def validate(self):
        expected = {
            Kind.SRS: ("alpha", "beta"),
            Kind.PRELU: ("alpha",),
            Kind.SWISH: ("alpha",),
        }.get(self.kind, ())
        if tuple(self.params) != expected:
            raise InvalidParameterError(
                f"{self.kind.value} expects params {expected}, got {tuple(self.params)}"
            )
        if self.clamp_floor < 0:
            raise InvalidParameterError("clamp_floor must be >= 0")
        if self.kind is Kind.SRS:
            a, b = float(self.params["alpha"]), float(self.params["beta"])
            if not (a > 0 and b > 0):
                raise InvalidParameterError(f"SRS needs alpha, beta > 0 (got {a}, {b})")
            if srs_pole_exists(a, b):
                raise InvalidParameterError(
                    f"SRS denominator has a real root: beta={b} >= alpha*e={a * E}"
                )

    def trainable_names(self) -> list[str]:
        return [k for k in self.params if self.trainable.get(k, False)]

    def project(self):
        """Clamp trainable params to ``clamp_floor`` and keep SRS clear of its pole."""
        for k in self.trainable_names():
            np.maximum(self.params[k], self.clamp_floor, out=self.params[k])
        if self.kind is Kind.SRS:
            cap = POLE_MARGIN * float(self.params["alpha"]) * E
            if float(self.params["beta"]) > cap:
                self.params["beta"][...] = cap

    def copy(self) -> "Activation":
        return Activation(
            self.kind,
            {k: v.copy() for k, v in self.params.items()},
            dict(self.fixed),
            dict(self.trainable),
            self.clamp_floor,
        )


def srs(alpha: float = 5.0, beta: float = 3.0, trainable: bool = True, clamp_floor: float = 0.01):
    return Activation(
        Kind.SRS,
        {"alpha": alpha, "beta": beta},
        trainable={"alpha": trainable, "beta": trainable},
        clamp_floor=clamp_floor,
    )


def make(kind, channels: int = 1, **kw) -> Activation:
    """Build an activation with the default constants used throughout the lab.

    ``kind`` may be a :class:`Kind` or its string value. Keyword overrides:
    ``alpha``/``beta`` for SRS, ``alpha`` for PReLU/Swish/LReLU/ELU,
    ``trainable`` for Swish, ``lower``/``upper``/``stochastic`` for RReLU.
    """
    kind = Kind(kind) if not isinstance(kind, Kind) else kind
    floor = kw.pop("clamp_floor", 0.01)
    if kind is Kind.SRS:
        return srs(kw.pop("alpha", 5.0), kw.pop("beta", 3.0), kw.pop("trainable", True), floor)
    if kind is Kind.PRELU:
        a = np.full(channels, kw.pop("alpha", 0.1), dtype=np.float64)
        if channels == 1:
            a = a.reshape(())
        return Activation(kind, {"alpha": a}, clamp_floor=floor)
    if kind is Kind.SWISH:
        tr = kw.pop("trainable", False)
        return Activation(kind, {"alpha": kw.pop("alpha", 1.0)}, trainable={"alpha": tr},
                          clamp_floor=floor)
    fixed = {
        Kind.LRELU: {"alpha": 0.2},
        Kind.ELU: {"alpha": 1.0},
        Kind.SELU: {"lambda": SELU_LAMBDA, "alpha": SELU_ALPHA},
        Kind.RRELU: {"lower": 1 / 8, "upper": 1 / 3, "stochastic": 0.0},
    }.get(kind, {})
    fixed.update({k: float(v) for k, v in kw.items()})
    return Activation(kind, {}, fixed, clamp_floor=floor)


ALL_KINDS = [k for k in Kind if k is not Kind.IDENTITY]


# ---------------------------------------------------------------------------
# structural queries for SRS


@dataclass(frozen=True)
class SrsShape:
    min_location: float
    min_value: float
    supremum: float


def srs_pole_exists(alpha: float, beta: float) -> bool:
    """True iff ``x/alpha + exp(-x/beta)`` has a real root, i.e. beta >= alpha*e.

    The denominator's minimum is ``(beta/alpha)(1 - ln(beta/alpha))`` at
    ``x = -beta ln(beta/alpha)``.
    """
    return beta >= alpha * E


def srs_shape(alpha: float, beta: float) -> SrsShape:
    if not (alpha > 0 and beta > 0):
        raise InvalidParameterError("alpha and beta must be positive")
    if srs_pole_exists(alpha, beta):
        raise InvalidParameterError(f"beta={beta} >= alpha*e; SRS has a pole")
    return SrsShape(-beta, alpha * beta / (beta - alpha * E), alpha)


# ---------------------------------------------------------------------------
# elementwise kernels


def _check(x):
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError("activation input must be finite")
    return x


def _sigmoid(z):
    ez = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + ez), ez / (1.0 + ez))


def _softplus(z):
    return np.logaddexp(0.0, z)


def _srs_parts(act, x):
    # u = exp(-|x|/beta) never overflows; for x <= 0 the fraction is
    # multiplied through by exp(x/beta).
    a = float(act.params["alpha"])
    b = float(act.params["beta"])
    u = np.exp(np.abs(x) * (-1.0 / b))
    pos = x > 0
    t = x * (1.0 / a)
    den = np.where(pos, t + u, t * u + 1.0)
    return a, b, u, pos, den


def _rrelu_slope(act, noise):
    if noise is not None:
        return noise
    return 0.5 * (act.fixed["lower"] + act.fixed["upper"])


def evaluate(act: Activation, x, noise=None):
    """Return ``f(x)`` elementwise.

    ``noise`` is only consulted by RReLU and holds per-element negative
    slopes (see :func:`rrelu_noise`); otherwise the midpoint slope is used.
    """
    x = _check(x)
    k = act.kind
    if k is Kind.SRS:
        a, b, u, pos, den = _srs_parts(act, x)
        y = np.where(pos, x, x * u) / den
        # the exact value is below alpha; rounding in x/alpha can push the
        # quotient one ulp above it for large x
        return np.minimum(y, a, out=y) if y.ndim else np.minimum(y, a)
    if k is Kind.RELU:
        return np.maximum(x, 0.0)
    if k is Kind.LRELU:
        return np.where(x >= 0, x, act.fixed["alpha"] * x)
    if k is Kind.PRELU:
        return np.where(x >= 0, x, act.params["alpha"] * x)
    if k is Kind.RRELU:
        return np.where(x >= 0, x, _rrelu_slope(act, noise) * x)
    if k is Kind.SOFTPLUS:
        return _softplus(x)
    if k is Kind.ELU:
        return np.where(x >= 0, x, act.fixed["alpha"] * np.expm1(np.minimum(x, 0.0)))
    if k is Kind.SELU:
        lam, al = act.fixed["lambda"], act.fixed["alpha"]
        return lam * np.where(x >= 0, x, al * np.expm1(np.minimum(x, 0.0)))
    if k is Kind.SWISH:
        return x * _sigmoid(act.params["alpha"] * x)
    if k is Kind.SIGMOID:
        return _sigmoid(x)
    if k is Kind.SOFTSIGN:
        return x / (1.0 + np.abs(x))
    if k is Kind.TANH:
        return np.tanh(x)
    if k is Kind.HARDTANH:
        return np.clip(x, -1.0, 1.0)
    if k is Kind.MISH:
        return x * np.tanh(_softplus(x))
    if k is Kind.IDENTITY:
        return x.copy()
    raise ActivationError(f"unknown kind {k}")


def eval_dx(act: Activation, x, noise=None):
    """Return ``df/dx``; at kinks the right-hand derivative is used."""
    x = _check(x)
    k = act.kind
    if k is Kind.SRS:
        a, b, u, pos, den = _srs_parts(act, x)
        return (1.0 + x / b) * u / den**2
    if k is Kind.RELU:
        return (x >= 0).astype(np.float64)
    if k is Kind.LRELU:
        return np.where(x >= 0, 1.0, act.fixed["alpha"])
    if k is Kind.PRELU:
        return np.where(x >= 0, 1.0, act.params["alpha"] * np.ones_like(x))
    if k is Kind.RRELU:
        return np.where(x >= 0, 1.0, _rrelu_slope(act, noise) * np.ones_like(x))
    if k is Kind.SOFTPLUS:
        return _sigmoid(x)
    if k is Kind.ELU:
        return np.where(x >= 0, 1.0, act.fixed["alpha"] * np.exp(np.minimum(x, 0.0)))
    if k is Kind.SELU:
        lam, al = act.fixed["lambda"], act.fixed["alpha"]
        return lam * np.where(x >= 0, 1.0, al * np.exp(np.minimum(x, 0.0)))
    if k is Kind.SWISH:
        a = act.params["alpha"]
        s = _sigmoid(a * x)
        return s + a * x * s * (1.0 - s)
    if k is Kind.SIGMOID:
        s = _sigmoid(x)
        return s * (1.0 - s)
    if k is Kind.SOFTSIGN:
        return 1.0 / (1.0 + np.abs(x)) ** 2
    if k is Kind.TANH:
        return 1.0 - np.tanh(x) ** 2
    if k is Kind.HARDTANH:
        return ((x >= -1.0) & (x < 1.0)).astype(np.float64)
    if k is Kind.MISH:
        sp = _softplus(x)
        t = np.tanh(sp)
        return t + x * (1.0 - t**2) * _sigmoid(x)
    if k is Kind.IDENTITY:
        return np.ones_like(x)
    raise ActivationError(f"unknown kind {k}")


def eval_dparams(act: Activation, x):
    """Derivatives of ``f(x)`` with respect to each entry of ``act.params``.

    Returns an array of shape ``x.shape + (len(act.params),)``, ordered like
    ``act.params``. For per-channel PReLU the entry is the derivative with
    respect to the slope of that element's own channel. Parameterless kinds
    give a trailing axis of length 0.

    SRS (with D = x/alpha + exp(-x/beta)):
        dSRS/dalpha = x^2 / (alpha^2 D^2)
        dSRS/dbeta  = -x^2 exp(-x/beta) / (beta^2 D^2)
    """
    x = _check(x)
    k = act.kind
    if k is Kind.SRS:
        a, b, u, pos, den = _srs_parts(act, x)
        x2 = x * x / den**2
        da = np.where(pos, 1.0, u * u) * x2 / a**2
        db = -u * x2 / b**2
        return np.stack([da, db], axis=-1)
    if k is Kind.PRELU:
        return np.where(x >= 0, 0.0, x)[..., None]
    if k is Kind.SWISH:
        a = act.params["alpha"]
        s = _sigmoid(a * x)
        return (x * x * s * (1.0 - s))[..., None]
    return np.zeros(x.shape + (0,))


def srs_grads(act: Activation, x, check: bool = True):
    """SRS ``(df/dx, df/dalpha, df/dbeta)`` from one shared evaluation."""
    if check:
        x = _check(x)
    a, b, u, pos, den = _srs_parts(act, x)
    inv2 = den**-2
    u_inv2 = u * inv2
    dx = (1.0 + x * (1.0 / b)) * u_inv2
    x2 = x * x
    da = np.where(pos, inv2, u * u_inv2) * x2 * (1.0 / a**2)
    db = x2 * u_inv2 * (-1.0 / b**2)
    return dx, da, db


def eval_grads(act: Activation, x, noise=None):
    """``(eval_dx(act, x), eval_dparams(act, x))`` sharing one evaluation."""
    if act.kind is not Kind.SRS:
        return eval_dx(act, x, noise), eval_dparams(act, x)
    dx, da, db = srs_grads(act, x)
    return dx, np.stack([da, db], axis=-1)


def rrelu_noise(act: Activation, shape, rng: np.random.Generator):
    """Per-element RReLU slopes for stochastic mode, drawn from ``rng``."""
    return rng.uniform(act.fixed["lower"], act.fixed["upper"], size=shape)
