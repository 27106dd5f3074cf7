"""Boolean Fourier analysis on the hypercube, step by step.

Builds a small function on {-1,+1}^d, runs the fast Walsh-Hadamard
transform, and checks the two facts everything downstream relies on:
a parity has exactly one nonzero coefficient, and coefficient energy
equals mean-square value (Parseval).
"""

import numpy as np

from hierlearn.concept import cube_points
from hierlearn.core import RngStream
from hierlearn.lowerbound import (CubeFunction, parseval_decomposition,
                                  subset_index, walsh_hadamard)

d = 8
X = cube_points(d)
print(f"enumerated all {len(X)} points of the {d}-cube")

# a pure parity: chi_S(x) = x_1 * x_4
S = (0, 3)
f = CubeFunction(d, X[:, 0] * X[:, 3])
lam = walsh_hadamard(f)
print(f"parity on S={S}: coefficient at S is {lam[subset_index(S)]:.6f}, "
      f"total coefficient mass {np.sum(np.abs(lam)):.6f}")

# a noisy mixture: 0.3 * chi_S plus Gaussian junk
gen = RngStream(0).generator()
g = CubeFunction(d, 0.3 * f.values + 0.2 * gen.standard_normal(len(X)))
lam_g = walsh_hadamard(g)
print(f"noisy mixture: Parseval gap "
      f"{abs(np.sum(lam_g ** 2) - g.mean_square()):.2e}")

# how much of the target sits on S vs everywhere else
lam_S, off, resid = parseval_decomposition(g, S, 0.3)
print(f"coefficient on S = {lam_S:.4f}, off-S energy = {off:.4f}, "
      f"residual vs 0.3*chi_S = {resid:.4f}")
