import struct

import numpy as np
import pytest

from srslab import data as D


@pytest.fixture
def idx_pair(tmp_path):
    rng = np.random.default_rng(0)
    imgs = rng.integers(0, 256, (7, 28, 28), dtype=np.uint8)
    labels = rng.integers(0, 10, 7, dtype=np.uint8)
    ip, lp = tmp_path / "img", tmp_path / "lbl"
    D.write_idx(ip, imgs, D.IMAGE_MAGIC)
    D.write_idx(lp, labels, D.LABEL_MAGIC)
    return ip, lp, imgs, labels


def test_idx_round_trip(idx_pair):
    ip, lp, imgs, labels = idx_pair
    split = D.load_idx(ip, lp)
    assert split.inputs.shape == (7, 784) and split.inputs.dtype == np.float64
    np.testing.assert_allclose(split.inputs, imgs.reshape(7, -1) / 255.0)
    assert split.labels.tolist() == labels.tolist()


def test_idx_header_is_big_endian(idx_pair):
    ip, *_ = idx_pair
    raw = ip.read_bytes()
    assert struct.unpack(">IIII", raw[:16]) == (0x803, 7, 28, 28)


def test_idx_wrong_magic(idx_pair):
    ip, lp, *_ = idx_pair
    with pytest.raises(D.FormatError, match="magic"):
        D.load_idx(lp, ip)


def test_idx_truncated(idx_pair, tmp_path):
    ip, lp, *_ = idx_pair
    short = tmp_path / "short"
    short.write_bytes(ip.read_bytes()[:-10])
    with pytest.raises(D.FormatError, match="data bytes"):
        D.load_idx(short, lp)
    tiny = tmp_path / "tiny"
    tiny.write_bytes(b"\x00\x00")
    with pytest.raises(D.FormatError, match="header"):
        D.load_idx(tiny, lp)


def test_idx_count_mismatch(tmp_path):
    D.write_idx(tmp_path / "i", np.zeros((3, 2, 2)), D.IMAGE_MAGIC)
    D.write_idx(tmp_path / "l", np.zeros(4), D.LABEL_MAGIC)
    with pytest.raises(D.FormatError):
        D.load_idx(tmp_path / "i", tmp_path / "l")


def test_fashion_mnist_loader(tmp_path, monkeypatch):
    for split, (im, lb) in D.FMNIST_FILES.items():
        D.write_idx(tmp_path / im, np.full((4, 28, 28), 255), D.IMAGE_MAGIC)
        D.write_idx(tmp_path / lb, np.arange(4), D.LABEL_MAGIC)
    monkeypatch.setenv("SRSLAB_FASHION_MNIST", str(tmp_path))
    train, test = D.load_fashion_mnist()
    assert len(train) == len(test) == 4 and train.inputs.max() == 1.0


def test_fashion_mnist_missing(tmp_path):
    with pytest.raises(FileNotFoundError, match="gunzip"):
        D.load_fashion_mnist(str(tmp_path))


def test_split_validation():
    with pytest.raises(ValueError):
        D.DatasetSplit(np.zeros((3, 2)), np.zeros(2, int), "x")
    with pytest.raises(ValueError):
        D.DatasetSplit(np.zeros((2, 2)), np.array([0, 10]), "x")


@pytest.mark.parametrize("kind", sorted(D.TOY_CLASSES))
def test_toy_sets(kind):
    a = D.gen_toy(kind, 503, seed=3)
    b = D.gen_toy(kind, 503, seed=3)
    assert np.array_equal(a.inputs, b.inputs) and np.array_equal(a.labels, b.labels)
    assert a.inputs.shape == (503, 2)
    assert a.n_classes == D.TOY_CLASSES[kind]
    counts = np.bincount(a.labels, minlength=a.n_classes)
    assert counts.max() - counts.min() <= 1


def test_eight_gaussians_noise_free_on_centres():
    s = D.gen_toy("eight-gaussians", 80, noise=0.0)
    np.testing.assert_allclose(np.hypot(*s.inputs.T), 2 * np.sqrt(2))
    np.testing.assert_allclose(s.inputs, D.eight_gaussian_centers()[s.labels])


def test_toy_rejects_bad_args():
    with pytest.raises(ValueError):
        D.gen_toy("spirals")
    with pytest.raises(ValueError):
        D.gen_toy("two-moons", noise=-1)
