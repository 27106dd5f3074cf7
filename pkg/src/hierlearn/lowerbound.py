"""Exact-enumeration lower-bound experiments over the Boolean cube.

The kernel/feature-map separation experiments fit, for every size-k subset S
of the uniform block, the composite parity target alpha * prod_{j in S} x_j
(unit second moment on the +-1 cube) from one shared sample, then compute the
exact population risk by enumerating all 2^d cube points.  The floor alpha^2/16
times the target's second moment is the comparison threshold; ties count as
below (strict-less comparison, recorded in the report).
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass

import numpy as np

from .core import RngStream, solve_psd, DecompositionError
from .concept import cube_points
from . import baselines


class CubeFunction:
    """A function on the +-1 cube given by its full value table.

    Point n has coordinate j equal to +1 when bit j of n is 0, else -1
    (matching concept.cube_points).  Values may be (2^d,) or (2^d, k).
    """

    def __init__(self, d: int, values):
        if d > 22:
            raise ValueError("cube functions limited to d <= 22")
        self.d = int(d)
        self.values = np.asarray(values, dtype=np.float64)
        if self.values.shape[0] != (1 << d):
            raise ValueError("value table must have 2^d rows")

    @classmethod
    def from_callable(cls, d: int, fn, scale: float = 1.0):
        return cls(d, fn(cube_points(d, scale)))

    def mean_square(self) -> float:
        return float(np.mean(self.values ** 2))


def subset_index(S) -> int:
    """Bitmask index of a coordinate subset."""
    mask = 0
    for j in S:
        mask |= 1 << int(j)
    return mask


def walsh_hadamard(f: CubeFunction) -> np.ndarray:
    """Fourier coefficients lambda_S = E_x[f(x) prod_{j in S} x_j], indexed by
    subset bitmask; O(d 2^d) in-place butterfly."""
    v = f.values.astype(np.float64).copy()
    n = 1 << f.d
    h = 1
    while h < n:
        v = v.reshape((-1, 2, h) + v.shape[1:])
        a = v[:, 0].copy()
        b = v[:, 1].copy()
        v[:, 0] = a + b
        v[:, 1] = a - b
        v = v.reshape((n,) + f.values.shape[1:])
        h *= 2
    return v / n


def walsh_hadamard_naive(f: CubeFunction) -> np.ndarray:
    """O(4^d) direct summation; oracle for the fast transform (small d)."""
    if f.d > 12:
        raise ValueError("naive transform only for small d")
    n = 1 << f.d
    idx = np.arange(n)
    popcount = np.zeros((n, n), dtype=np.int64)
    anded = idx[:, None] & idx[None, :]
    for j in range(f.d):
        popcount += (anded >> j) & 1
    signs = np.where(popcount % 2 == 0, 1.0, -1.0)
    return (signs @ f.values) / n


def parseval_decomposition(f: CubeFunction, S, alpha: float):
    """Exact decomposition E[(f - alpha prod_{j in S} x_j)^2]
    = (lambda_S - alpha)^2 + sum_{S' != S} lambda_{S'}^2.

    Returns (lambda_S, off_energy, residual); the identity is re-checked
    against direct enumeration to 1e-10.
    """
    if f.values.ndim != 1:
        raise ValueError("parseval_decomposition expects a scalar function")
    lam = walsh_hadamard(f)
    i = subset_index(S)
    lam_S = float(lam[i])
    off = float(np.sum(lam ** 2) - lam[i] ** 2)
    residual = (lam_S - alpha) ** 2
    X = cube_points(f.d)
    chi = np.prod(X[:, sorted(int(j) for j in S)], axis=1) if len(list(S)) else np.ones(X.shape[0])
    direct = float(np.mean((f.values - alpha * chi) ** 2))
    if abs(direct - (residual + off)) > 1e-10 * max(1.0, direct):
        raise AssertionError("Parseval identity violated beyond tolerance")
    return lam_S, off, residual


@dataclass
class SeparationReport:
    params: dict
    threshold: float
    risks: list
    fraction_below: float
    comparator: str = "lt"

    def to_json(self) -> str:
        return json.dumps({"params": self.params, "threshold": self.threshold,
                           "risks": self.risks, "fraction_below": self.fraction_below,
                           "comparator": self.comparator})

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    def risks_to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["subset", "risk"])
            for subset, risk in zip(self.params["subsets"], self.risks):
                w.writerow(["-".join(str(j) for j in subset), repr(risk)])


def _parity_targets(X: np.ndarray, subsets) -> np.ndarray:
    """chi_S(X) column per subset; X on the +-1 cube."""
    cols = [np.prod(X[:, list(S)], axis=1) for S in subsets]
    return np.stack(cols, axis=1)


def kernel_separation_experiment(d: int, d1: int, k: int, alpha: float, N: int,
                                 spec: baselines.KernelSpec, ridge: float,
                                 rng: RngStream, full_label: bool = False) -> SeparationReport:
    """Fit every size-k parity on the d1-block from one shared N-point sample
    with kernel ridge regression; exact risks by full cube enumeration."""
    if d > 18:
        raise ValueError("experiment enumeration limited to d <= 18")
    if not (1 <= k <= d1 <= d):
        raise ValueError("need 1 <= k <= d1 <= d")
    subsets = list(itertools.combinations(range(d1), k))
    X_all = cube_points(d)

    def targets(X):
        # composite part, normalized to unit second moment on the +-1 cube;
        # full_label adds the (first-coordinate) base signal x_{i_1}
        t = alpha * _parity_targets(X, subsets)
        if full_label:
            t = t + np.stack([X[:, S[0]] for S in subsets], axis=1)
        return t

    t_all = targets(X_all)
    threshold = alpha ** 2 / 16.0
    if N > 0:
        gen = rng.generator()
        X_tr = 2.0 * gen.integers(0, 2, size=(N, d)) - 1.0
        K = kernel_sym(spec, X_tr)
        K_all = baselines.kernel_gram(spec, X_all, X_tr)
        # shared factorization: solve for all subsets' weight vectors at once
        try:
            W = solve_psd(K, targets(X_tr), ridge)
        except DecompositionError:
            W = np.linalg.pinv(K + ridge * np.eye(N)) @ targets(X_tr)
        preds = K_all @ W                   # (2^d, n_subsets)
    else:
        preds = np.zeros_like(t_all)
    risks = np.mean((preds - t_all) ** 2, axis=0)
    fraction = float(np.mean(risks < threshold))
    params = {"d": d, "d1": d1, "k": k, "alpha": alpha, "N": N,
              "kernel": spec.kind, "ridge": ridge,
              "subsets": [list(S) for S in subsets]}
    return SeparationReport(params, threshold, [float(r) for r in risks], fraction)


def kernel_sym(spec, X):
    K = baselines.kernel_gram(spec, X)
    return 0.5 * (K + K.T)


# registered feature maps for explicit-feature regression experiments ------

def make_feature_map(phi_id: str, d: int, D: int, rng: RngStream):
    """Registered maps: 'relu' (random ReLU), 'fourier' (random cos),
    'monomial:<deg>' (raw monomials), 'parity-basis:<d1>:<k>' (the subset
    characters themselves, D must match C(d1,k))."""
    if phi_id == "relu":
        Wf = rng.generator().standard_normal((D, d + 1))
        return lambda X: np.maximum(np.hstack([X, np.ones((X.shape[0], 1))]) @ Wf.T, 0.0)
    if phi_id == "fourier":
        gen = rng.generator()
        Wf = gen.standard_normal((D, d))
        b = gen.uniform(0, 2 * np.pi, size=D)
        return lambda X: np.cos(X @ Wf.T + b)
    if phi_id.startswith("monomial:"):
        deg = int(phi_id.split(":")[1])
        combos = [c for t in range(deg + 1) for c in itertools.combinations(range(d), t)]
        if len(combos) != D:
            raise ValueError(f"monomial basis has {len(combos)} features, not {D}")
        return lambda X: np.stack(
            [np.prod(X[:, list(c)], axis=1) if c else np.ones(X.shape[0]) for c in combos],
            axis=1)
    if phi_id.startswith("parity-basis:"):
        _, d1s, ks = phi_id.split(":")
        combos = list(itertools.combinations(range(int(d1s)), int(ks)))
        if len(combos) != D:
            raise ValueError(f"parity basis has {len(combos)} features, not {D}")
        return lambda X: _parity_targets(X, combos)
    raise ValueError(f"unknown feature map {phi_id!r}")


def feature_map_separation_experiment(d: int, d1: int, k: int, alpha: float,
                                      D: int, phi_id: str,
                                      rng: RngStream, N: int = None) -> SeparationReport:
    """Exact least squares over a D-dimensional feature map, per subset."""
    if d > 18:
        raise ValueError("experiment enumeration limited to d <= 18")
    if D < 1:
        raise ValueError("D must be >= 1")
    subsets = list(itertools.combinations(range(d1), k))
    X_all = cube_points(d)
    chi_all = _parity_targets(X_all, subsets)
    feats = make_feature_map(phi_id, d, D, rng.child(0))
    N = N if N is not None else 1 << d
    if N >= (1 << d):
        X_tr, chi_tr = X_all, chi_all
    else:
        gen = rng.child(1).generator()
        X_tr = 2.0 * gen.integers(0, 2, size=(N, d)) - 1.0
        chi_tr = _parity_targets(X_tr, subsets)
    Phi_tr = feats(X_tr)
    Phi_all = feats(X_all)
    W, *_ = np.linalg.lstsq(Phi_tr, alpha * chi_tr, rcond=None)
    preds = Phi_all @ W
    risks = np.mean((preds - alpha * chi_all) ** 2, axis=0)
    threshold = alpha ** 2 / 16.0
    params = {"d": d, "d1": d1, "k": k, "alpha": alpha, "D": D, "N": N,
              "feature_map": phi_id, "subsets": [list(S) for S in subsets]}
    return SeparationReport(params, threshold, [float(r) for r in risks],
                            float(np.mean(risks < threshold)))


def offdiag_energy_census(M: np.ndarray) -> np.ndarray:
    """For each column r of M (N x R): the exact minimum of
    sum_{r' != r} <M_{r'}, b>^2 over b with <M_r, b> = 1.

    Zero columns are infeasible and reported as +inf.  When R >= 2N the
    rank obstruction says these minima cannot all be <= 1/9.
    """
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    N, R = M.shape
    out = np.empty(R)
    for r in range(R):
        c = M[:, r]
        cn = np.linalg.norm(c)
        if cn == 0.0:
            out[r] = np.inf
            continue
        A = np.delete(M, r, axis=1)
        G = A @ A.T
        w, U = np.linalg.eigh(G)
        tol = max(w[-1], 0.0) * N * 1e-14
        cb = U.T @ c
        null = w <= tol
        if np.linalg.norm(cb[null]) > 1e-9 * cn:
            out[r] = 0.0               # feasible direction in the null space
        else:
            out[r] = 1.0 / float(np.sum(cb[~null] ** 2 / w[~null]))
    return out
