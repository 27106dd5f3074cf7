"""How small can the weights be while still fitting a 6-parity?

A two-layer net with fixed +-1/sqrt(m) output weights and no biases is
trained to fit y = 6^3 * x_1...x_6 on the +-1/sqrt(6) cube, then its
hidden weights are rescaled onto a Frobenius ball of radius 10.5*sqrt(6)
and fine-tuned under projection.  Zero-column padding lifts the solution
to higher dimension without changing any output, and row duplication
widens it without changing the norm -- so the complexity of the solution
does not grow with d or m.
"""

import numpy as np

from hierlearn import harness
from hierlearn.concept import cube_points

net, risk, frob = harness.train_reference_parity(1, epochs_fit=120,
                                                 epochs_cap=80)
cap = 10.5 * np.sqrt(6.0)
print(f"d=6, m=200: risk {risk:.3f} at ||W||_F = {frob:.2f} "
      f"(cap {cap:.2f})")

X6 = cube_points(6, 1.0 / np.sqrt(6.0))
for d in (12, 40):
    lifted = harness.pad_parity_net(net, d)
    Xd = np.zeros((64, d))
    Xd[:, :6] = X6 * np.sqrt(6.0 / d)
    gap = np.max(np.abs(lifted(Xd) - net(X6)))
    print(f"padded to d={d}: output gap {gap:.1e}, "
          f"||W||_F = {np.linalg.norm(lifted.weights[0]):.2f} "
          f"(= sqrt(d/6) * {frob:.2f})")

wide = harness.duplicate_rows(net, 4)
gap = np.max(np.abs(wide(X6) - net(X6)))
print(f"duplicated to m=800: output gap {gap:.1e}, "
      f"||W||_F = {np.linalg.norm(wide.weights[0]):.2f} (unchanged)")
