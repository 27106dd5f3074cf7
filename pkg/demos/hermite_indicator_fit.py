"""Writing a smooth activation as an indicator expectation.

The random-feature constructions need phi(<w1, x>) expressed as
E_alpha[ 1[alpha + b >= 0] * h(alpha) ] where alpha is the Gaussian
projection of a random first layer onto the target direction.  The fit
expands the indicator moments in Hermite polynomials; here we fit
phi(z) = z, look at the moments that drive it, and Monte-Carlo check
the identity at a few points.
"""

import numpy as np

from hierlearn import hermite as hm
from hierlearn.concept import SmoothActivation, TaylorSeries
from hierlearn.core import RngStream

print("indicator moments p'_i = E[1[a>=0] h_i(a)] (normalized Gaussian):")
for i in range(6):
    print(f"  i={i}: {hm.p_prime(i):+.6f}")
print(f"closed form check: p'_1 = 1/sqrt(2*pi) = {1 / hm.SQRT_2PI:.6f}")

phi = SmoothActivation(TaylorSeries((0.0, 1.0), 1.0))
fit = hm.fit_indicator_function(phi, eps=0.05)
print(f"\nfit for phi(z)=z at eps=0.05: clamp bound {fit.bound:.1f}, "
      f"terms {[i for i, _, _ in fit.odd_terms]}")

for x1 in (-0.8, 0.0, 0.5):
    est, target, se = hm.verify_fit(fit, x1, 200000, RngStream(3))
    print(f"x1={x1:+.1f}: estimate {est:+.4f} vs target {target:+.4f} "
          f"(stderr {se:.4f})")
