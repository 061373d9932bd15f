"""
Fashion-MNIST comparison
========================

Trains the 784-512-512-512-256-10 network for 10,000 steps with SRS and
ReLU on seeds 1-3 and prints median test errors. Needs the uncompressed IDX
files in ``$SRSLAB_FASHION_MNIST`` (default ``./data/fashion-mnist``).
Each run takes a few minutes on one CPU core.
"""

import statistics
import sys

from srslab import data as D
from srslab import train as T

try:
    train, test = D.load_fashion_mnist()
except FileNotFoundError as exc:
    sys.exit(str(exc))

for act in ("srs", "relu"):
    errs = []
    for seed in (1, 2, 3):
        log = T.run_experiment(T.TrainConfig(activation=act, seed=seed), train, test)
        errs.append(log.final_test_err)
        print(f"{act} seed {seed}: {100 * log.final_test_err:.2f}%")
    print(f"{act} median: {100 * statistics.median(errs):.2f}%")
