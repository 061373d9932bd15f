"""
Following a single unit through fifty random layers
===================================================

x_i = f(w_i x_{i-1} + b_i) with weights and biases drawn from U(-1, 1).
Sigmoid squeezes everything into a narrow band so late updates are tiny;
SRS keeps moving.
"""

import numpy as np

from srslab import activations as A
from srslab import dynamics as Dy

for name, act in [("srs", A.srs(5, 3)), ("sigmoid", A.make("sigmoid")), ("tanh", A.make("tanh"))]:
    late = [Dy.iterate_activation(act, 50, s).late_mean_abs_dx(40, 50) for s in range(100)]
    print(f"{name:<8} median late |dx| over 100 seeds: {np.median(late):.4f}")

tr = Dy.iterate_activation(A.srs(5, 3), 10, seed=0)
print(tr.to_csv())
