"""Datasets: IDX (MNIST-family) ingestion and 2-D toy classification sets."""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class FormatError(ValueError):
    pass


@dataclass
class DatasetSplit:
    inputs: np.ndarray  # (N, features) float64
    labels: np.ndarray  # (N,) int64
    name: str
    n_classes: int = 10

    def __post_init__(self):
        if len(self.inputs) != len(self.labels):
            raise ValueError("inputs and labels differ in length")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValueError("labels outside class range")

    def __len__(self):
        return len(self.labels)

    @property
    def features(self) -> int:
        return self.inputs.shape[1]


def _read_idx(path, magic):
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 8:
        raise FormatError(f"{path}: truncated header")
    (got,) = struct.unpack(">I", raw[:4])
    if got != magic:
        raise FormatError(f"{path}: magic 0x{got:08x}, expected 0x{magic:08x}")
    ndim = got & 0xFF
    hdr = 4 + 4 * ndim
    if len(raw) < hdr:
        raise FormatError(f"{path}: truncated header")
    dims = struct.unpack(f">{ndim}I", raw[4:hdr])
    size = math.prod(dims)
    if len(raw) - hdr < size:
        raise FormatError(f"{path}: expected {size} data bytes, found {len(raw) - hdr}")
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=hdr).reshape(dims)


def load_idx(images_path, labels_path, name: str | None = None) -> DatasetSplit:
    """Read an uncompressed IDX image/label pair; pixels are scaled to [0, 1]."""
    images = _read_idx(images_path, IMAGE_MAGIC)
    labels = _read_idx(labels_path, LABEL_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    x = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return DatasetSplit(x, labels.astype(np.int64), name or os.path.basename(images_path))


def write_idx(path, array, magic):
    """Write a uint8 array as IDX (used for fixtures)."""
    a = np.asarray(array, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        f.write(struct.pack(f">{a.ndim}I", *a.shape))
        f.write(a.tobytes())


FMNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def fashion_mnist_dir() -> str:
    return os.environ.get("SRSLAB_FASHION_MNIST", os.path.join(os.getcwd(), "data", "fashion-mnist"))


def load_fashion_mnist(root: str | None = None):
    """``(train, test)`` splits from the four uncompressed IDX files in ``root``.

    ``root`` defaults to ``$SRSLAB_FASHION_MNIST`` or ``./data/fashion-mnist``.
    """
    root = root or fashion_mnist_dir()
    out = []
    for split, (im, lb) in FMNIST_FILES.items():
        ip, lp = os.path.join(root, im), os.path.join(root, lb)
        if not (os.path.exists(ip) and os.path.exists(lp)):
            raise FileNotFoundError(
                f"Fashion-MNIST {split} files not found in {root!r}; download and gunzip "
                f"{im}.gz / {lb}.gz there (or set SRSLAB_FASHION_MNIST)"
            )
        out.append(load_idx(ip, lp, f"fashion-mnist-{split}"))
    return tuple(out)


# ---------------------------------------------------------------------------
# toy 2-D sets; ``noise`` scales each generator's canonical spread

TOY_CLASSES = {"two-moons": 2, "pinwheel": 5, "eight-gaussians": 8}


def _moons(n, noise, rng):
    n0 = n // 2
    n1 = n - n0
    t0 = np.linspace(0, np.pi, n0)
    t1 = np.linspace(0, np.pi, n1)
    outer = np.c_[np.cos(t0), np.sin(t0)]
    inner = np.c_[1 - np.cos(t1), 0.5 - np.sin(t1)]
    x = np.vstack([outer, inner]) + rng.normal(0, 0.1 * noise, (n, 2))
    y = np.r_[np.zeros(n0, int), np.ones(n1, int)]
    return x, y


def _pinwheel(n, noise, rng, arms=5, radial=0.3, tangential=0.05, rate=0.25):
    per = np.full(arms, n // arms)
    per[: n % arms] += 1
    y = np.repeat(np.arange(arms), per)
    feats = rng.standard_normal((n, 2)) * np.array([radial, tangential]) * noise
    feats[:, 0] += 1.0
    angle = 2 * np.pi * y / arms + rate * np.exp(feats[:, 0])
    c, s = np.cos(angle), np.sin(angle)
    x = np.c_[feats[:, 0] * c - feats[:, 1] * s, feats[:, 0] * s + feats[:, 1] * c]
    return 2.0 * x, y


def eight_gaussian_centers(radius=2 * math.sqrt(2)):
    ang = np.arange(8) * np.pi / 4
    return radius * np.c_[np.cos(ang), np.sin(ang)]


def _eight(n, noise, rng):
    y = np.arange(n) % 8
    x = eight_gaussian_centers()[y] + rng.normal(0, 0.1 * noise, (n, 2))
    return x, y


def gen_toy(kind: str, n: int = 1000, noise: float = 1.0, seed: int = 0) -> DatasetSplit:
    """Labelled 2-D points: two-moons (2 classes), pinwheel (5 arms),
    eight-gaussians (8 modes on a circle of radius 2*sqrt(2))."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    gens = {"two-moons": _moons, "pinwheel": _pinwheel, "eight-gaussians": _eight}
    if kind not in gens:
        raise ValueError(f"unknown toy dataset {kind!r}; choose from {sorted(gens)}")
    rng = np.random.default_rng(seed)
    x, y = gens[kind](n, noise, rng)
    perm = rng.permutation(n)
    return DatasetSplit(x[perm].astype(np.float64), y[perm].astype(np.int64), kind, TOY_CLASSES[kind])
