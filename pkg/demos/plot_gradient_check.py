"""
Checking backprop against finite differences
============================================

Every layer writes analytic gradients during ``Model.backward``. Here they
are compared to central differences of the cross-entropy for a small SRS
network with batch normalization, including the trainable alpha and beta.
"""

import numpy as np

from srslab import gradcheck as G
from srslab.nn import activation_factory, mlp

rng = np.random.default_rng(0)
model = mlp((10, 16, 16, 4), activation_factory("srs"), use_bn=True)
G.init_gaussian(model, rng, sigma=0.5)
x, y = rng.normal(size=(8, 10)), rng.integers(0, 4, 8)

for r in G.check_model(model, x, y):
    print(f"{r.name:<22} {r.checked:>4} coords  max rel err {r.max_rel_err:.2e}")
