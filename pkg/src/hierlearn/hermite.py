"""Existential weight construction via Hermite analysis of the ReLU indicator.

The key identity: for alpha, beta ~ N(0,1) independent and |x1| <= 1,

    E[ 1[alpha*x1 + beta*sqrt(1-x1^2) >= 0] * h_i(alpha) ] = p'_i * x1^i

for the degree-i probabilists' Hermite polynomial h_i (odd i), where
p'_i = E[1[alpha >= 0] h_i(alpha)] = +-(i-2)!!/sqrt(2*pi).  Summing the scaled
truncations hat-h_i reproduces any odd-plus-constant Taylor activation from
the ReLU indicator alone, which is what lets a wide random layer represent a
smooth target at its initialization activation pattern.

Two conventions appear side by side: expectations here are with respect to
the standard normal density, while the classical orthogonality display
(integral of h_i h_j against the *unnormalized* weight e^{-z^2/2}) carries an
extra sqrt(2*pi).  The lower bound (i-1)!!/4 on the indicator moments lives
in the unnormalized convention, where the moment is exactly (i-2)!!; it holds
for odd i <= 9 and first fails at i = 11.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import RngStream
from .concept import SmoothActivation, TwoLayerSmoothNet, complexity_eps, complexity_s

SQRT_2PI = np.sqrt(2.0 * np.pi)


def hermite_poly(i: int, z):
    """Probabilists' Hermite h_i(z) by the three-term recurrence
    h_{n+1} = z h_n - n h_{n-1}; h_0 = 1, h_1 = z."""
    if not 0 <= i <= 40:
        raise ValueError("degree limited to 0..40")
    z = np.asarray(z, dtype=np.float64)
    if i == 0:
        return np.ones_like(z)
    prev, cur = np.ones_like(z), z.copy()
    for n in range(1, i):
        prev, cur = cur, z * cur - n * prev
    return cur


def truncation_bound(i: int, eps: float) -> float:
    """B_i = 100 sqrt(i) + 10 sqrt(log 1/eps)."""
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0,1)")
    return 100.0 * np.sqrt(i) + 10.0 * np.sqrt(np.log(1.0 / eps))


def truncated_hermite(i: int, z, eps: float):
    """hat-h_i: h_i inside [-B_i, B_i], frozen at the boundary value outside."""
    B = truncation_bound(i, eps)
    z = np.asarray(z, dtype=np.float64)
    clipped = np.clip(z, -B, B)
    return hermite_poly(i, clipped)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(256)


def _gauss_half_line(fn, upper: float = 45.0) -> float:
    """integral_0^inf fn(u) e^{-u^2/2}/sqrt(2*pi) du by 256-point quadrature
    on the split interval [0, upper] (the tail beyond is below e^-1000)."""
    u = 0.5 * upper * (_GL_NODES + 1.0)
    w = 0.5 * upper * _GL_WEIGHTS
    return float(np.sum(w * fn(u) * np.exp(-0.5 * u * u)) / SQRT_2PI)


def p_prime(i: int) -> float:
    """p'_i = E_{a~N(0,1)}[1[a >= 0] h_i(a)], by quadrature.

    Closed form for odd i: (-1)^((i-1)/2) (i-2)!!/sqrt(2*pi); in particular
    p'_1 = 1/sqrt(2*pi)."""
    return _gauss_half_line(lambda u: hermite_poly(i, u))


def indicator_moment_unnormalized(i: int) -> float:
    """The same moment against the weight e^{-z^2/2} without the normalizer,
    i.e. sqrt(2*pi) * p'_i; the (i-1)!!/4 lower bound is stated for |this|."""
    return SQRT_2PI * p_prime(i)


def double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


@dataclass(frozen=True)
class HermiteFit:
    """The bounded function h with E[1[a x1 + b sqrt(1-x1^2) >= 0] h(a)] ~ phi(x1).

    Built as h = sum over odd i of (c_i / p'_i) hat-h_i + 2 c_0, then clamped
    to [-C_eps(phi,1), C_eps(phi,1)].
    """

    phi: SmoothActivation
    eps: float
    odd_terms: tuple          # of (i, c_i / p'_i, B_i)
    c0: float
    bound: float              # C_eps(phi, 1)

    def __call__(self, z):
        z = np.asarray(z, dtype=np.float64)
        out = np.full_like(z, 2.0 * self.c0)
        for i, coef, B in self.odd_terms:
            out = out + coef * hermite_poly(i, np.clip(z, -B, B))
        return np.clip(out, -self.bound, self.bound)

    def to_json(self) -> str:
        return json.dumps({
            "eps": self.eps,
            "c0": self.c0,
            "odd_terms": [[i, c, B] for i, c, B in self.odd_terms],
            "bound": self.bound,
            "normalization": "probabilists-standard-normal",
        })


def fit_indicator_function(phi: SmoothActivation, eps: float) -> HermiteFit:
    """Assemble the fit h for an odd-plus-constant activation."""
    coeffs = phi.series.coefficients
    for i, c in enumerate(coeffs):
        if i >= 2 and i % 2 == 0 and c != 0.0:
            raise ValueError("activation must have only zero- and odd-order terms")
    odd_terms = []
    for i, c in enumerate(coeffs):
        if i % 2 == 1 and c != 0.0:
            odd_terms.append((i, c / p_prime(i), truncation_bound(i, eps)))
    c0 = coeffs[0] if coeffs else 0.0
    return HermiteFit(phi, eps, tuple(odd_terms), float(c0),
                      complexity_eps(phi, 1.0, eps))


def verify_fit(fit: HermiteFit, x1: float, mc: int, rng: RngStream):
    """Monte-Carlo estimate of E[1[a x1 + b sqrt(1-x1^2) >= 0] h(a)].

    Returns (estimate, target phi(x1), stderr); the fit contract is
    |estimate - target| <= eps + 4 stderr."""
    if mc < 10**4:
        raise ValueError("mc must be at least 1e4")
    if not -1.0 <= x1 <= 1.0:
        raise ValueError("x1 must lie in [-1, 1]")
    gen = rng.generator()
    vals = np.empty(mc)
    done = 0
    while done < mc:                      # blockwise to bound memory
        n = min(mc - done, 1 << 20)
        a = gen.standard_normal(n)
        b = gen.standard_normal(n)
        ind = (a * x1 + b * np.sqrt(1.0 - x1 * x1)) >= 0.0
        vals[done:done + n] = ind * fit(a)
        done += n
    est = float(np.mean(vals))
    stderr = float(np.std(vals) / np.sqrt(mc))
    return est, float(fit.phi(x1)), stderr


# ---------------------------------------------------------------------------
# existential weights for the first layer

def eval_general_target(net: TwoLayerSmoothNet, X: np.ndarray) -> np.ndarray:
    """Phi_r(x) = sum_i a[r,i] phi_{r,i}(<w1, (x,1)>/||(x,1)||) <w2, (x,1)>.

    The two-direction form with inputs augmented by a 1; directions live in
    R^(d+1) with unit norm."""
    if net.w2 is None:
        raise ValueError("general-form evaluation needs the second directions")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Xa = np.hstack([X, np.ones((X.shape[0], 1))])
    norms = np.linalg.norm(Xa, axis=1, keepdims=True)
    Xhat = Xa / norms
    k, p, _ = net.w1.shape
    out = np.zeros((X.shape[0], k))
    for r in range(k):
        for i in range(p):
            if net.a[r, i] == 0.0:
                continue
            out[:, r] += net.a[r, i] * net.activations[r][i](Xhat @ net.w1[r, i]) \
                * (Xa @ net.w2[r, i])
    return out


def construct_existential_weights(net: TwoLayerSmoothNet, W0: np.ndarray,
                                  A: np.ndarray, eps: float) -> np.ndarray:
    """Rows w*_j = (1/(m Var(a))) sum_{r,i} A[r,j] a*[r,i]
    h^{(r,i)}(<w0_j, w1[r,i]>/sigma_w) w2[r,i].

    W0 rows are i.i.d. N(0, sigma_w^2 I); the fit argument is normalized by
    the empirical sigma_w so it is standard normal, and A's empirical variance
    rescales the average so E[A D_{W0} W* (x,1)] = Phi(x)."""
    if net.w2 is None:
        raise ValueError("need the two-direction (general-form) net")
    W0 = np.asarray(W0, dtype=np.float64)
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    m = W0.shape[0]
    sigma_w = float(np.sqrt(np.mean(W0 ** 2)))
    a_var = float(np.mean(A ** 2))
    k, p, _ = net.w1.shape
    Wstar = np.zeros_like(W0)
    for r in range(k):
        for i in range(p):
            if net.a[r, i] == 0.0:
                continue
            fit = fit_indicator_function(net.activations[r][i], eps)
            z = (W0 @ net.w1[r, i]) / sigma_w            # (m,) ~ N(0,1)
            scale = A[r] * net.a[r, i] * fit(z) / (m * a_var)
            Wstar += np.outer(scale, net.w2[r, i])
    return Wstar


def verify_existential(Wstar: np.ndarray, net: TwoLayerSmoothNet,
                       W0: np.ndarray, A: np.ndarray, X_test: np.ndarray) -> float:
    """max over test points of ||A D_{W0} W* (x,1) - Phi(x)|| / ||(x,1)||."""
    X_test = np.atleast_2d(np.asarray(X_test, dtype=np.float64))
    Xa = np.hstack([X_test, np.ones((X_test.shape[0], 1))])
    target = eval_general_target(net, X_test)
    mask = (Xa @ W0.T) >= 0.0                           # (T, m)
    hidden = mask * (Xa @ Wstar.T)
    approx = hidden @ np.atleast_2d(A).T
    err = np.linalg.norm(approx - target, axis=1) / np.linalg.norm(Xa, axis=1)
    return float(np.max(err))
