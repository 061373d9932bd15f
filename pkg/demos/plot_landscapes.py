"""
Output landscapes of random networks
====================================

A randomly initialised 2 -> 64x4 -> 1 network is evaluated on a 256x256 grid.
ReLU networks produce piecewise-linear surfaces with sharp creases; SRS
surfaces are smooth. The roughness score is the mean squared discrete
Laplacian of the standardised grid. PGM images are written next to this script.
"""

import os

from srslab import activations as A
from srslab import dynamics as Dy

out = os.path.join(os.path.dirname(os.path.abspath(__file__)), "demo_out")
os.makedirs(out, exist_ok=True)

for name, act in [("srs", A.srs(5, 3)), ("relu", A.make("relu")), ("tanh", A.make("tanh"))]:
    ls = Dy.output_landscape(act, seed=0)
    with open(os.path.join(out, f"landscape-{name}.pgm"), "wb") as f:
        f.write(Dy.to_pgm(ls.grid))
    print(f"{name:<5} roughness {Dy.landscape_roughness(ls):.3e}")
