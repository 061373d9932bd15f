"""
Iterated single-unit dynamics and random-network output landscapes.

``iterate_activation`` follows one unit through ``x_i = f(w_i x_{i-1} + b_i)``
with weights, biases and the start value drawn from U(-1, 1).
``output_landscape`` evaluates a randomly initialised 2 -> 64x4 -> 1 network
on a coordinate grid; ``landscape_roughness`` scores it by the mean squared
5-point Laplacian of the standardised grid.
"""

from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass

import numpy as np

from . import activations as A
from .nn import Act, Dense, Model

LANDSCAPE_WIDTHS = (2, 64, 64, 64, 64, 1)


@dataclass
class Trajectory:
    x0: float
    xs: np.ndarray  # x_1 .. x_n
    dxs: np.ndarray  # x_i - x_{i-1}
    activation_kind: str
    seed: int

    @property
    def records(self):
        return [(i + 1, float(x), float(d)) for i, (x, d) in enumerate(zip(self.xs, self.dxs))]

    def late_mean_abs_dx(self, start=40, stop=50) -> float:
        """Mean |dx_i| over iterations ``start..stop`` inclusive (1-based)."""
        return float(np.mean(np.abs(self.dxs[start - 1:stop])))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("iter,x,dx\n")
        buf.write(f"0,{self.x0:.17g},\n")
        for i, x, d in self.records:
            buf.write(f"{i},{x:.17g},{d:.17g}\n")
        return buf.getvalue()


def iterate_activation(act: A.Activation, iters: int = 50, seed: int = 0,
                       weights=None, biases=None, x0=None) -> Trajectory:
    """Run ``iters`` steps of ``x_i = f(w_i * x_{i-1} + b_i)``.

    ``weights``, ``biases`` and ``x0`` override the U(-1, 1) draws (the
    draws still happen, so the remaining values are unchanged).
    """
    if iters < 2:
        raise ValueError("iters must be >= 2")
    rng = np.random.default_rng(seed)
    start = rng.uniform(-1, 1)
    w = rng.uniform(-1, 1, iters)
    b = rng.uniform(-1, 1, iters)
    if x0 is not None:
        start = float(x0)
    if weights is not None:
        w = np.broadcast_to(np.asarray(weights, float), (iters,))
    if biases is not None:
        b = np.broadcast_to(np.asarray(biases, float), (iters,))
    xs = np.empty(iters)
    x = start
    for i in range(iters):
        x = float(A.evaluate(act, w[i] * x + b[i]))
        xs[i] = x
    dxs = np.diff(np.r_[start, xs])
    return Trajectory(start, xs, dxs, act.name, seed)


# ---------------------------------------------------------------------------
# output landscapes


@dataclass
class Landscape:
    grid: np.ndarray  # (H, W); row i is y, column j is x
    extent: tuple
    seed: int
    activation_kind: str
    network: Model | None = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        for row in self.grid:
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()


def landscape_network(act: A.Activation, seed: int, widths=LANDSCAPE_WIDTHS, weight_scale: float = 1.0) -> Model:
    """Fully connected net with ``act`` after each hidden layer.

    Weights are Xavier-uniform; biases are drawn from the same uniform
    bound (zero biases would make every ReLU crease pass through the
    origin). ``weight_scale`` multiplies both.
    """
    rng = np.random.default_rng(seed)
    layers = []
    for i, (n_in, n_out) in enumerate(zip(widths[:-1], widths[1:])):
        bound = math.sqrt(6.0 / (n_in + n_out))
        W = rng.uniform(-bound, bound, (n_in, n_out)) * weight_scale
        b = rng.uniform(-bound, bound, n_out) * weight_scale
        layers.append(Dense(n_in, n_out, W, b))
        if i < len(widths) - 2:
            layers.append(Act(act.copy()))
    return Model(layers).eval()


def output_landscape(act: A.Activation, shape=(256, 256), extent=(-6.0, 6.0, -6.0, 6.0),
                     seed: int = 0, weight_scale: float = 1.0, widths=LANDSCAPE_WIDTHS) -> Landscape:
    H, W = shape
    if H < 2 or W < 2:
        raise ValueError("landscape grid needs H, W >= 2")
    if not all(math.isfinite(v) for v in extent):
        raise ValueError("extent must be finite")
    x0, x1, y0, y1 = extent
    net = landscape_network(act, seed, widths, weight_scale)
    xs = np.linspace(x0, x1, W)
    ys = np.linspace(y0, y1, H)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.c_[gx.ravel(), gy.ravel()]
    out = net(pts)[:, 0].reshape(H, W)
    return Landscape(out, tuple(extent), seed, act.name, net)


def landscape_roughness(ls) -> float:
    """Mean squared 5-point Laplacian over interior cells of the standardised grid.

    Invariant under affine changes of the grid values; 0 for constant grids.
    """
    g = np.asarray(getattr(ls, "grid", ls), dtype=np.float64)
    sd = g.std()
    if not sd > 0:
        return 0.0
    z = (g - g.mean()) / sd
    lap = z[:-2, 1:-1] + z[2:, 1:-1] + z[1:-1, :-2] + z[1:-1, 2:] - 4.0 * z[1:-1, 1:-1]
    return float(np.mean(lap**2))


def output_bound(ls: Landscape, act: A.Activation) -> float:
    """|W_out|_1 * sup|f| + |b_out| for bounded activations."""
    if act.kind is A.Kind.SRS:
        shape = A.srs_shape(float(act.params["alpha"]), float(act.params["beta"]))
        sup = max(abs(shape.min_value), shape.supremum)
    elif act.kind in A.BOUNDED:
        sup = 1.0
    else:
        raise ValueError(f"{act.name} is unbounded")
    last = ls.network.layers[-1]
    return float(np.abs(last.params["W"]).sum() * sup + np.abs(last.params["b"]).sum())


def to_pgm(grid, binary: bool = True) -> bytes:
    """Min-max normalised 8-bit PGM (P5 binary or P2 plain). Row 0 is the
    top of the image, so the grid is flipped to put +y up."""
    g = np.asarray(grid, dtype=np.float64)[::-1]
    lo, hi = g.min(), g.max()
    img = np.zeros(g.shape, np.uint8) if hi <= lo else np.rint(255 * (g - lo) / (hi - lo)).astype(np.uint8)
    H, W = img.shape
    if binary:
        return f"P5\n{W} {H}\n255\n".encode() + img.tobytes()
    rows = "\n".join(" ".join(str(int(v)) for v in row) for row in img)
    return f"P2\n{W} {H}\n255\n{rows}\n".encode()


def read_pgm(data: bytes) -> np.ndarray:
    """Parse P2/P5 bytes as written by :func:`to_pgm` (no comment support)."""
    m = re.match(rb"(P[25])\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if not m:
        raise ValueError("not a PGM")
    W, H = int(m.group(2)), int(m.group(3))
    body = data[m.end():]
    if m.group(1) == b"P5":
        return np.frombuffer(body, np.uint8, count=W * H).reshape(H, W)
    return np.array(body.split()[:W * H], dtype=np.int64).astype(np.uint8).reshape(H, W)
