"""Output moments of an activation applied to a standard-normal input."""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .activations import Activation, Kind, evaluate, srs, srs_pole_exists

SQRT_2PI = math.sqrt(2.0 * math.pi)


class ConfigError(ValueError):
    pass


class DivergenceError(ValueError):
    pass


class Status(enum.Enum):
    CONVERGENT = "convergent"
    DIVERGENT = "divergent"


@dataclass(frozen=True)
class QuadratureConfig:
    truncation: float = 12.0
    panels: int = 2048
    rule: str = "gauss-legendre"  # or "simpson"
    order: int = 5  # nodes per Gauss-Legendre panel

    def validate(self):
        if not self.truncation > 0:
            raise ConfigError("truncation must be > 0")
        if self.panels < 16:
            raise ConfigError(f"panels must be >= 16 (got {self.panels})")
        if self.rule not in ("gauss-legendre", "simpson"):
            raise ConfigError(f"unknown rule {self.rule!r}")
        if self.rule == "simpson" and self.panels % 2:
            raise ConfigError("simpson needs an even panel count")


@dataclass(frozen=True)
class MomentResult:
    status: Status
    mean: float | None = None
    variance: float | None = None
    quadrature_error_estimate: float = 0.0

    @property
    def divergent(self) -> bool:
        return self.status is Status.DIVERGENT

    def cell(self, marker: str = "×") -> str:
        if self.divergent:
            return marker
        return f"{self.mean:.4f} ({self.variance:.4f})"


def normal_pdf(x):
    return np.exp(-0.5 * np.asarray(x) ** 2) / SQRT_2PI


def _nodes(cfg: QuadratureConfig, panels: int):
    t = cfg.truncation
    if cfg.rule == "simpson":
        x = np.linspace(-t, t, panels + 1)
        w = np.ones(panels + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return x, w * (2 * t / panels) / 3.0
    g, gw = np.polynomial.legendre.leggauss(cfg.order)
    edges = np.linspace(-t, t, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    w = (half[:, None] * gw[None, :]).ravel()
    return x, w


def _integrate(act, cfg, panels):
    x, w = _nodes(cfg, panels)
    fx = evaluate(act, x)
    pw = w * normal_pdf(x)
    m1 = float(np.dot(pw, fx))
    m2 = float(np.dot(pw, fx * fx))
    return m1, m2 - m1 * m1


def is_divergent(act: Activation) -> bool:
    if act.kind is not Kind.SRS:
        return False
    return srs_pole_exists(float(act.params["alpha"]), float(act.params["beta"]))


def moments(act: Activation, cfg: QuadratureConfig | None = None) -> MomentResult:
    """E[f(X)] and Var[f(X)] for X ~ N(0, 1) by quadrature over [-T, T].

    SRS with a pole is reported as divergent without integrating. The error
    estimate is the larger of the mean/variance changes between ``panels``
    and ``panels // 2``.
    """
    cfg = cfg or QuadratureConfig()
    cfg.validate()
    if is_divergent(act):
        return MomentResult(Status.DIVERGENT)
    m, v = _integrate(act, cfg, cfg.panels)
    m_half, v_half = _integrate(act, cfg, cfg.panels // 2)
    err = max(abs(m - m_half), abs(v - v_half))
    return MomentResult(Status.CONVERGENT, m, max(v, 0.0), err)


class MCEstimate(NamedTuple):
    mean: float
    variance: float
    stderr: float
    variance_stderr: float


def mc_oracle(act: Activation, n: int = 10**7, seed: int = 0, chunk: int = 10**6) -> MCEstimate:
    """Monte-Carlo moments of f(X), X ~ N(0, 1), with standard errors.

    Accumulates centred power sums per chunk (shifted by the first chunk's
    mean) so 10^7 samples never sit in memory at once.
    """
    if n < 10**4:
        raise ValueError("mc_oracle needs n >= 10^4")
    if is_divergent(act):
        raise DivergenceError("activation output has no finite moments")
    rng = np.random.default_rng(seed)
    shift = None
    s1 = s2 = s3 = s4 = 0.0
    left = n
    while left:
        k = min(chunk, left)
        y = evaluate(act, rng.standard_normal(k))
        if shift is None:
            shift = float(y.mean())
        d = y - shift
        d2 = d * d
        s1 += d.sum()
        s2 += d2.sum()
        s3 += (d2 * d).sum()
        s4 += (d2 * d2).sum()
        left -= k
    mu = s1 / n
    # central moments from raw moments of d
    c2 = s2 / n - mu**2
    c4 = s4 / n - 4 * mu * s3 / n + 6 * mu**2 * s2 / n - 3 * mu**4
    var = c2 * n / (n - 1)
    stderr = math.sqrt(var / n)
    var_se = math.sqrt(max(c4 - c2 * c2, 0.0) / n)
    return MCEstimate(shift + mu, var, stderr, var_se)


def moments_table(alphas, betas, cfg: QuadratureConfig | None = None):
    """Moment grid with rows indexed by beta and columns by alpha."""
    cfg = cfg or QuadratureConfig()
    cfg.validate()
    alphas, betas = list(alphas), list(betas)
    if any(a <= 0 for a in alphas) or any(b <= 0 for b in betas):
        raise ConfigError("alphas and betas must be positive")
    if not alphas:
        return []
    grid = []
    for b in betas:
        row = []
        for a in alphas:
            if srs_pole_exists(a, b):
                row.append(MomentResult(Status.DIVERGENT))
            else:
                row.append(moments(srs(a, b), cfg))
        grid.append(row)
    return grid


def _num(v) -> str:
    return f"{v:g}"


def table_csv(alphas, betas, grid, marker: str = "×") -> str:
    """CSV text: header of alphas, first column of betas, ``mean (variance)`` cells."""
    buf = io.StringIO()
    buf.write("beta\\alpha," + ",".join(_num(a) for a in alphas) + "\n")
    for b, row in zip(betas, grid):
        buf.write(_num(b) + "," + ",".join(c.cell(marker) for c in row) + "\n")
    return buf.getvalue()
