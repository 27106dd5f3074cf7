import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hierlearn.core import RngStream
from hierlearn import baselines as bl
from hierlearn import lowerbound as lb
from hierlearn.concept import cube_points


def _random_cube_function(d, seed, k=None):
    gen = RngStream(seed).generator()
    shape = (1 << d,) if k is None else (1 << d, k)
    return lb.CubeFunction(d, gen.standard_normal(shape))


def test_cube_function_validation():
    with pytest.raises(ValueError):
        lb.CubeFunction(23, np.zeros(2))
    with pytest.raises(ValueError):
        lb.CubeFunction(3, np.zeros(7))


def test_subset_index():
    assert lb.subset_index([]) == 0
    assert lb.subset_index([0, 2]) == 5
    assert lb.subset_index([3]) == 8


def test_fast_transform_equals_naive():
    for seed in range(5):
        f = _random_cube_function(6, seed)
        assert np.max(np.abs(lb.walsh_hadamard(f)
                             - lb.walsh_hadamard_naive(f))) <= 1e-12


def test_parity_has_single_coefficient():
    d, S = 5, (1, 3)
    X = cube_points(d)
    f = lb.CubeFunction(d, np.prod(X[:, list(S)], axis=1))
    lam = lb.walsh_hadamard(f)
    assert lam[lb.subset_index(S)] == pytest.approx(1.0)
    assert np.sum(np.abs(lam)) == pytest.approx(1.0)


@settings(deadline=None, max_examples=20)
@given(st.integers(0, 2 ** 32), st.integers(2, 8))
def test_parseval_energy_identity(seed, d):
    f = _random_cube_function(d, seed)
    lam = lb.walsh_hadamard(f)
    assert np.sum(lam ** 2) == pytest.approx(f.mean_square(), abs=1e-10)


def test_parseval_decomposition_matches_enumeration():
    f = _random_cube_function(7, 42)
    lam_S, off, resid = lb.parseval_decomposition(f, (0, 3), 0.3)
    X = cube_points(7)
    chi = X[:, 0] * X[:, 3]
    direct = np.mean((f.values - 0.3 * chi) ** 2)
    assert resid + off == pytest.approx(direct, abs=1e-10)


def test_separation_report_serialization(tmp_path):
    rep = lb.SeparationReport({"d": 4, "subsets": [[0, 1]]}, 0.005625,
                              [0.1], 0.0)
    doc = json.loads(rep.to_json())
    assert doc["comparator"] == "lt"
    assert doc["threshold"] == 0.005625
    path = tmp_path / "risks.csv"
    rep.risks_to_csv(path)
    assert path.read_text().splitlines() == ["subset,risk", "0-1,0.1"]


def test_kernel_experiment_zero_samples_fraction_zero():
    spec = bl.KernelSpec(kind="gaussian", h=1.0)
    rep = lb.kernel_separation_experiment(6, 6, 2, 0.3, 0, spec, 1e-8,
                                          RngStream(0))
    assert rep.fraction_below == 0.0
    # zero predictor risk is exactly alpha^2 per subset
    assert all(r == pytest.approx(0.09) for r in rep.risks)


def test_kernel_experiment_is_deterministic():
    spec = bl.KernelSpec(kind="gaussian", h=1.0)
    a = lb.kernel_separation_experiment(6, 6, 2, 0.3, 10, spec, 1e-8,
                                        RngStream(5))
    b = lb.kernel_separation_experiment(6, 6, 2, 0.3, 10, spec, 1e-8,
                                        RngStream(5))
    assert a.risks == b.risks


def test_feature_map_parity_basis_fits_exactly():
    # regression onto the characters themselves reaches risk 0 on every subset
    rep = lb.feature_map_separation_experiment(6, 6, 2, 0.3, 15,
                                               "parity-basis:6:2", RngStream(1))
    assert rep.fraction_below == 1.0
    assert max(rep.risks) < 1e-20


def test_feature_map_monomial_dimension_check():
    with pytest.raises(ValueError):
        lb.make_feature_map("monomial:2", 6, 5, RngStream(0))


def test_offdiag_census_orthogonal_columns():
    M = np.eye(6)[:, :4]
    out = lb.offdiag_energy_census(M)
    assert np.allclose(out, 0.0)


def test_offdiag_census_duplicate_columns():
    c = np.ones(4) / 2.0
    M = np.stack([c, c], axis=1)
    out = lb.offdiag_energy_census(M)
    # the duplicate forces off-diagonal energy exactly 1 at both columns
    assert np.allclose(out, 1.0)


def test_offdiag_census_zero_column_infeasible():
    M = np.zeros((3, 2))
    M[:, 0] = [1.0, 0.0, 0.0]
    out = lb.offdiag_energy_census(M)
    assert out[0] == 0.0
    assert np.isinf(out[1])


def test_offdiag_census_scaling_invariance():
    gen = RngStream(7).generator()
    M = gen.standard_normal((5, 8))
    out = lb.offdiag_energy_census(M)
    M2 = M.copy()
    M2[:, 3] *= 10.0          # b rescales by 1/c, so the energy drops by c^2
    out2 = lb.offdiag_energy_census(M2)
    assert out2[3] == pytest.approx(out[3] / 100.0, rel=1e-9)
