import math

import numpy as np
import pytest

from srslab import data as D
from srslab import train as T
from srslab.nn import mlp, activation_factory


@pytest.fixture(scope="module")
def moons():
    return D.gen_toy("two-moons", 600, seed=0), D.gen_toy("two-moons", 600, seed=1)


def test_config_validation():
    T.TrainConfig().validate()
    for bad in [dict(lr=0), dict(steps=0), dict(init="orthogonal"), dict(activation="gelu"),
                dict(srs_init=(1.0, 3.0)), dict(use_bn=True, batch_size=1), dict(clamp_floor=-1)]:
        with pytest.raises(T.ConfigError):
            T.TrainConfig(**bad).validate()


def test_kv_round_trip():
    cfg = T.TrainConfig(lr=0.1, use_bn=True, srs_init=(2.0, 1.5), activation="relu")
    again = T.config_from_mapping(T.parse_kv(T.format_kv(cfg)))
    assert again == cfg


def test_kv_parsing_errors():
    assert T.parse_kv("# only a comment\n\nlr = 0.5 # trailing\n") == {"lr": "0.5"}
    with pytest.raises(T.ConfigError):
        T.parse_kv("lr 0.5")
    with pytest.raises(T.ConfigError):
        T.config_from_mapping({"learning_rate": "1"})


def test_sgd_step_matches_hand_computation():
    m = mlp((2, 2), activation_factory("relu"))
    T.init_weights(m, "gaussian", seed=0)
    d = m.layers[0]
    W0, b0 = d.params["W"].copy(), d.params["b"].copy()
    gW, gb = np.array([[1.0, -2.0], [0.5, 0.0]]), np.array([0.1, -0.1])
    cfg = T.TrainConfig(lr=0.1, momentum=0.9, weight_decay=0.01)
    for _ in range(2):
        d.grads["W"], d.grads["b"] = gW.copy(), gb.copy()
        T.sgd_step(m, cfg)
    vW = -0.1 * (gW + 0.01 * W0)
    W1 = W0 + vW
    vW = 0.9 * vW - 0.1 * (gW + 0.01 * W1)
    np.testing.assert_allclose(d.params["W"], W1 + vW, rtol=1e-14)
    vb = -0.1 * gb
    np.testing.assert_allclose(d.params["b"], b0 + vb + (0.9 * vb - 0.1 * gb), rtol=1e-14)


def test_sgd_step_projects_srs():
    m = mlp((2, 3, 2), activation_factory("srs"))
    T.init_weights(m, seed=0)
    layer = m.act_layers()[0]
    for l in m.layers:
        l.grads = {k: np.zeros_like(v) for k, v in l.params.items()}
    layer.grads["alpha"] = np.asarray(1e6)
    layer.grads["beta"] = np.asarray(-1e6)
    T.sgd_step(m, T.TrainConfig(lr=1.0, momentum=0.0))
    a, b = float(layer.act.params["alpha"]), float(layer.act.params["beta"])
    assert a == 0.01 and b == pytest.approx(0.95 * a * math.e)


def test_init_schemes_statistics():
    m = mlp((400, 300, 10), activation_factory("relu"))
    T.init_weights(m, "gaussian", seed=0, sigma=0.1)
    assert m.layers[0].params["W"].std() == pytest.approx(0.1, rel=0.02)
    T.init_weights(m, "xavier", seed=0)
    assert np.abs(m.layers[0].params["W"]).max() <= math.sqrt(6 / 700)
    T.init_weights(m, "he", seed=0)
    assert m.layers[0].params["W"].std() == pytest.approx(math.sqrt(2 / 400), rel=0.02)


def test_training_learns_two_moons(moons):
    train, test = moons
    cfg = T.TrainConfig(lr=0.01, steps=1500, init="xavier", log_interval=250, eval_interval=500, seed=2)
    log = T.run_experiment(cfg, train, test, hidden=(32, 32))
    assert log.converged
    assert log.records[-1]["train_acc"] >= 0.95
    assert log.final_test_err <= 0.05


def test_training_is_deterministic(moons):
    train, test = moons
    cfg = T.TrainConfig(lr=0.05, steps=120, log_interval=40, eval_interval=60, use_bn=True, seed=3)
    a = T.run_experiment(cfg, train, test, hidden=(16,)).to_csv()
    b = T.run_experiment(cfg, train, test, hidden=(16,)).to_csv()
    assert a == b


def test_metrics_csv_layout(moons):
    train, test = moons
    cfg = T.TrainConfig(steps=25, log_interval=10, eval_interval=20, init="xavier")
    log = T.run_experiment(cfg, train, test, hidden=(8, 8))
    lines = log.to_csv().splitlines()
    assert lines[0] == ("step,loss,train_acc,test_err,layer1_mean,layer2_mean,"
                        "layer1_premean,layer2_premean,alpha_1,beta_1,alpha_2,beta_2")
    steps = [int(l.split(",")[0]) for l in lines[1:]]
    assert steps == [10, 20, 25]
    assert lines[1].split(",")[3] == "" and lines[2].split(",")[3] != ""


def test_divergence_is_recorded(moons):
    train, test = moons
    cfg = T.TrainConfig(lr=1e6, steps=50, activation="relu", init="he")
    log = T.run_experiment(cfg, train, test, hidden=(16, 16))
    assert log.diverged and not log.converged
    assert math.isnan(log.final_test_err)


def test_chance_level_run_is_not_converged():
    log = T.MetricsLog("srs", 1, final_test_err=0.9)
    assert not log.converged
    assert T.MetricsLog("srs", 1, final_test_err=0.5).converged


def test_ablation_table(moons):
    train, test = moons
    base = T.TrainConfig(steps=30, log_interval=30, eval_interval=30, init="xavier")
    cells = T.grid_cells(lr=[0.01, 1e12], use_bn=[False])
    res = T.run_ablation(base, ["srs", "relu"], cells, train, test, seeds=(1, 2, 3), hidden=(8,))
    lines = res.to_csv().splitlines()
    assert lines[0] == "model,lr=0.01 w/o BN,lr=1e+12 w/o BN"
    assert lines[1].startswith("srs,") and lines[2].startswith("relu,")
    assert lines[2].endswith(",-")
    assert lines[1].split(",")[1] != "-"
    assert res.median_error("relu", 1) == math.inf
