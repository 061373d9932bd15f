"""
The SRS curve and its two parameters
====================================

SRS(x) = x / (x/alpha + exp(-x/beta)) is bounded: it dips to a single
minimum on the negative side and saturates towards ``alpha`` on the
positive side. ``alpha`` sets the ceiling, ``beta`` how slowly it is reached.
"""

import numpy as np

from srslab import activations as A

x = np.linspace(-8, 8, 9)
for alpha, beta in [(5, 3), (3, 2), (2, 1)]:
    act = A.srs(alpha, beta)
    sh = A.srs_shape(alpha, beta)
    print(f"alpha={alpha} beta={beta}: min {sh.min_value:.4f} at x={sh.min_location}, sup {sh.supremum}")
    print("   f(x)  ", np.round(A.evaluate(act, x), 4))
    print("   f'(x) ", np.round(A.eval_dx(act, x), 4))

###############################################################################
# The denominator x/alpha + exp(-x/beta) has a real root once beta reaches
# alpha*e; those settings are rejected, and training keeps beta below
# 0.95*alpha*e.

for beta in (1.0, 2.5, 2.7, 2.75, 3.0):
    print(f"alpha=1 beta={beta}: pole={A.srs_pole_exists(1.0, beta)}")

act = A.srs(1.0, 2.5)
act.params["beta"][...] = 9.0  # as if an optimiser overshot
act.project()
print("after projection beta =", float(act.params["beta"]))
