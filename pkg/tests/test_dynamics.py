import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srslab import activations as A
from srslab import dynamics as Dy


def test_trajectory_recurrence():
    act = A.srs(5, 3, trainable=False)
    tr = Dy.iterate_activation(act, 50, seed=7)
    rng = np.random.default_rng(7)
    x = rng.uniform(-1, 1)
    w, b = rng.uniform(-1, 1, 50), rng.uniform(-1, 1, 50)
    assert tr.x0 == x
    for i in range(50):
        x = float(A.evaluate(act, w[i] * x + b[i]))
        assert tr.xs[i] == x
    np.testing.assert_allclose(tr.dxs, np.diff(np.r_[tr.x0, tr.xs]))


def test_trajectory_overrides_and_csv():
    tr = Dy.iterate_activation(A.make("relu"), 5, weights=1.0, biases=0.5, x0=0.0)
    np.testing.assert_allclose(tr.xs, [0.5, 1.0, 1.5, 2.0, 2.5])
    lines = tr.to_csv().splitlines()
    assert lines[0] == "iter,x,dx" and lines[1] == "0,0,"
    assert len(lines) == 7
    assert tr.late_mean_abs_dx(4, 5) == pytest.approx(0.5)


def test_iterate_rejects_short_runs():
    with pytest.raises(ValueError):
        Dy.iterate_activation(A.make("relu"), 1)


def test_sigmoid_saturates():
    # f(w x + b) with |w|,|b| <= 1 keeps sigmoid in a narrow band of outputs
    tr = Dy.iterate_activation(A.make("sigmoid"), 50, seed=0)
    assert np.all((tr.xs > 0.1) & (tr.xs < 0.9))


def test_landscape_shape_and_determinism():
    act = A.srs(5, 3)
    a = Dy.output_landscape(act, (32, 40), seed=2)
    b = Dy.output_landscape(act, (32, 40), seed=2)
    assert a.grid.shape == (32, 40)
    assert np.array_equal(a.grid, b.grid)
    assert not np.array_equal(a.grid, Dy.output_landscape(act, (32, 40), seed=3).grid)


def test_landscape_grid_orientation():
    # identity activation and hand-set weights: output = x + 2y
    ls = Dy.output_landscape(A.Activation(A.Kind.IDENTITY), (3, 5), (-1, 1, -2, 2), widths=(2, 1))
    net = ls.network
    net.layers[0].params["W"][...] = [[1.0], [2.0]]
    net.layers[0].params["b"][...] = 0.0
    gx, gy = np.meshgrid(np.linspace(-1, 1, 5), np.linspace(-2, 2, 3))
    np.testing.assert_allclose(net(np.c_[gx.ravel(), gy.ravel()])[:, 0].reshape(3, 5), gx + 2 * gy)


@pytest.mark.parametrize("kind", ["srs", "sigmoid", "tanh"])
def test_bounded_activations_bound_the_output(kind):
    act = A.srs(5, 3) if kind == "srs" else A.make(kind)
    ls = Dy.output_landscape(act, (64, 64), (-50, 50, -50, 50), seed=1)
    assert np.abs(ls.grid).max() <= Dy.output_bound(ls, act) + 1e-9
    with pytest.raises(ValueError):
        Dy.output_bound(ls, A.make("relu"))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10), st.floats(-5, 5), st.integers(0, 1000))
def test_roughness_affine_invariant(scale, shift, seed):
    g = np.random.default_rng(seed).normal(size=(12, 12))
    assert Dy.landscape_roughness(g * scale + shift) == pytest.approx(Dy.landscape_roughness(g), rel=1e-9)


def test_roughness_limits():
    assert Dy.landscape_roughness(np.ones((8, 8))) == 0.0
    x, y = np.meshgrid(np.arange(20.0), np.arange(20.0))
    assert Dy.landscape_roughness(3 * x - y) == pytest.approx(0.0, abs=1e-20)
    checker = (-1.0) ** (x + y)
    assert Dy.landscape_roughness(checker) == pytest.approx(64.0)


@pytest.mark.parametrize("binary", [True, False])
def test_pgm_round_trip(binary):
    g = np.random.default_rng(0).normal(size=(9, 13))
    # make sure leading payload bytes can be whitespace values
    g[-1, :3] = g.min()
    data = Dy.to_pgm(g, binary=binary)
    assert data.startswith(b"P5\n13 9\n255\n" if binary else b"P2\n13 9\n255\n")
    img = Dy.read_pgm(data)
    assert img.shape == (9, 13)
    assert img.min() == 0 and img.max() == 255
    expected = np.rint(255 * (g - g.min()) / np.ptp(g)).astype(np.uint8)[::-1]
    assert np.array_equal(img, expected)


def test_pgm_constant_grid():
    assert Dy.read_pgm(Dy.to_pgm(np.full((2, 3), 7.0))).max() == 0
