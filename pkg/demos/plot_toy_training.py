"""
Training on two moons
=====================

A 2-32-32-2 SRS network trained with momentum SGD. The metrics log keeps
loss, accuracy, the mean output of every hidden layer and the learned
(alpha, beta) of each SRS layer.
"""

from srslab import data as D
from srslab import train as T

train = D.gen_toy("two-moons", 1000, seed=0)
test = D.gen_toy("two-moons", 1000, seed=1)
cfg = T.TrainConfig(lr=0.01, steps=2000, init="xavier", log_interval=500, eval_interval=500)
log = T.run_experiment(cfg, train, test, hidden=(32, 32))
print(log.to_csv())
print(f"final test error {100 * log.final_test_err:.2f}%")
for i, (a, b) in enumerate(log.final_params, 1):
    print(f"layer {i}: alpha={a:.3f} beta={b:.3f}")
