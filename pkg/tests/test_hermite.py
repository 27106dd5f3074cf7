import json
import math

import numpy as np
import pytest

from hierlearn.core import RngStream
from hierlearn import hermite as hm
from hierlearn.concept import (SmoothActivation, TaylorSeries, complexity_s,
                               monomial_activation)

_PHI_LINEAR = SmoothActivation(TaylorSeries((0.0, 1.0)))


def test_hermite_polynomials_match_numpy():
    z = np.linspace(-3, 3, 11)
    for i in range(13):
        coeffs = np.zeros(i + 1)
        coeffs[i] = 1.0
        ref = np.polynomial.hermite_e.hermeval(z, coeffs)
        assert np.allclose(hm.hermite_poly(i, z), ref, atol=1e-9)


def test_hermite_degree_limit():
    with pytest.raises(ValueError):
        hm.hermite_poly(41, 0.0)


def test_orthogonality_by_quadrature():
    # integral h_i h_j e^{-z^2/2} dz = sqrt(2 pi) j! delta_{ij}
    nodes, weights = np.polynomial.hermite_e.hermegauss(120)
    for i in range(13):
        for j in range(i, 13):
            val = np.sum(weights * hm.hermite_poly(i, nodes)
                         * hm.hermite_poly(j, nodes))
            expect = hm.SQRT_2PI * float(math.factorial(j)) if i == j else 0.0
            scale = hm.SQRT_2PI * float(math.factorial(j))
            assert val == pytest.approx(expect, abs=1e-8 * scale)


def test_p_prime_closed_forms():
    assert hm.p_prime(1) == pytest.approx(1.0 / hm.SQRT_2PI, abs=1e-12)
    for i in (3, 5, 7, 9, 11):
        sign = (-1.0) ** ((i - 1) // 2)
        expect = sign * hm.double_factorial(i - 2) / hm.SQRT_2PI
        assert hm.p_prime(i) == pytest.approx(expect, rel=1e-10)


def test_even_moments_vanish_except_constant():
    assert hm.p_prime(0) == pytest.approx(0.5, abs=1e-12)
    for i in (2, 4, 6):
        # E[1[a>=0] h_i(a)] for even i >= 2 is half the full-line moment = 0
        assert abs(hm.p_prime(i)) <= 1e-10


def test_unnormalized_moment_bound_convention():
    for i in (1, 3, 5, 7, 9):
        assert abs(hm.indicator_moment_unnormalized(i)) \
            >= hm.double_factorial(i - 1) / 4.0
    # the bound fails at i = 11 in this convention: 945 < 960
    assert abs(hm.indicator_moment_unnormalized(11)) \
        < hm.double_factorial(10) / 4.0


def test_truncation_bound_formula():
    assert hm.truncation_bound(4, np.exp(-1.0)) == pytest.approx(210.0)
    with pytest.raises(ValueError):
        hm.truncation_bound(1, 1.5)


def test_truncated_hermite_freezes_outside_band():
    B = hm.truncation_bound(3, 0.1)
    inside = hm.truncated_hermite(3, B - 1.0, 0.1)
    at_edge = hm.truncated_hermite(3, B, 0.1)
    beyond = hm.truncated_hermite(3, B + 50.0, 0.1)
    assert beyond == at_edge
    assert inside != at_edge


def test_fit_rejects_even_coefficients():
    phi = SmoothActivation(TaylorSeries((0.0, 0.0, 1.0)))
    with pytest.raises(ValueError):
        hm.fit_indicator_function(phi, 0.1)


def test_fit_is_clamped_and_serializes():
    fit = hm.fit_indicator_function(_PHI_LINEAR, 0.05)
    z = np.linspace(-500, 500, 101)
    assert np.all(np.abs(fit(z)) <= fit.bound + 1e-12)
    doc = json.loads(fit.to_json())
    assert doc["normalization"] == "probabilists-standard-normal"
    assert doc["odd_terms"][0][0] == 1


def test_fit_second_moment_within_sample_complexity():
    # E[h(a)^2] <= C_s(phi, 1)^2, by quadrature over the full line
    fit = hm.fit_indicator_function(_PHI_LINEAR, 0.05)
    nodes, weights = np.polynomial.hermite_e.hermegauss(150)
    second = np.sum(weights * fit(nodes) ** 2) / hm.SQRT_2PI
    assert second <= complexity_s(_PHI_LINEAR, 1.0) ** 2


def test_verify_fit_recovers_identity():
    fit = hm.fit_indicator_function(_PHI_LINEAR, 0.05)
    est, target, se = hm.verify_fit(fit, 0.5, 50000, RngStream(3))
    assert target == pytest.approx(0.5)
    assert abs(est - target) <= 0.05 + 4.0 * se


def test_verify_fit_input_validation():
    fit = hm.fit_indicator_function(_PHI_LINEAR, 0.05)
    with pytest.raises(ValueError):
        hm.verify_fit(fit, 0.5, 100, RngStream(0))
    with pytest.raises(ValueError):
        hm.verify_fit(fit, 1.5, 20000, RngStream(0))


def _general_linear_net(d, seed):
    gen = RngStream(seed).generator()
    w1 = gen.standard_normal(d + 1)
    w1 /= np.linalg.norm(w1)
    w2 = gen.standard_normal(d + 1)
    w2 /= np.linalg.norm(w2)
    from hierlearn.concept import TwoLayerSmoothNet
    return TwoLayerSmoothNet([[0.9]], w1.reshape(1, 1, -1),
                             [[monomial_activation(1, 1.0)]],
                             direction_norm=1.0, w2=w2.reshape(1, 1, -1))


def test_eval_general_target_formula():
    net = _general_linear_net(4, 5)
    X = RngStream(6).generator().standard_normal((7, 4))
    Xa = np.hstack([X, np.ones((7, 1))])
    xhat = Xa / np.linalg.norm(Xa, axis=1, keepdims=True)
    expect = 0.9 * (xhat @ net.w1[0, 0]) * (Xa @ net.w2[0, 0])
    assert np.allclose(hm.eval_general_target(net, X)[:, 0], expect, atol=1e-12)


def test_existential_construction_small():
    net = _general_linear_net(4, 7)
    rng = RngStream(8)
    m = 20000
    sigma_w = 1.0
    W0 = sigma_w * rng.child(0).generator().standard_normal((m, 5))
    A = rng.child(1).generator().standard_normal((1, m)) / np.sqrt(m)
    Wstar = hm.construct_existential_weights(net, W0, A, eps=0.1)
    X_test = rng.child(2).generator().standard_normal((20, 4))
    X_test /= np.linalg.norm(X_test, axis=1, keepdims=True)
    err = hm.verify_existential(Wstar, net, W0, A, X_test)
    assert err <= 0.3
