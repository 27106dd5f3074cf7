"""Target functions H = beta*F + alpha*G(F), their complexity measures, and data.

F and G are two-layer networks with smooth (polynomial) activations.  The hard
instances used in the separation experiments encode coordinate products
(parities) exactly as such networks via the sign-pattern polarization identity

    prod_{j in S} z_j = 1/(2^q q!) * sum_{s in {+-1}^q} (prod_i s_i) <s, z_S>^q

which yields width 2^q per output with all outer coefficients in {+-1}.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream

#: the fixed large constant in front of both complexity measures
C_STAR = 1.0e4


@dataclass(frozen=True)
class TaylorSeries:
    """Finite Taylor expansion sum_i c_i z^i with an evaluation radius."""

    coefficients: tuple
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(np.asarray(z, dtype=np.float64),
                                                np.asarray(self.coefficients))


@dataclass(frozen=True)
class SmoothActivation:
    """A polynomial activation, optionally restricted to zero+odd order terms."""

    series: TaylorSeries
    odd_and_zero_only: bool = False

    def __post_init__(self):
        if self.odd_and_zero_only:
            for i, c in enumerate(self.series.coefficients):
                if i >= 2 and i % 2 == 0 and c != 0.0:
                    raise ValueError(f"even-order coefficient c_{i}={c} not allowed")

    def __call__(self, z):
        return self.series(z)


def monomial_activation(degree: int, coeff: float, radius: float = 1.0,
                        odd_and_zero_only: bool = False) -> SmoothActivation:
    coeffs = [0.0] * degree + [float(coeff)]
    return SmoothActivation(TaylorSeries(tuple(coeffs), radius), odd_and_zero_only)


def complexity_s(phi: SmoothActivation, R: float) -> float:
    """Sample-complexity measure C*· sum_i (i+1) R^i |c_i|."""
    if R <= 0:
        raise ValueError("R must be positive")
    c = np.abs(np.asarray(phi.series.coefficients))
    i = np.arange(len(c))
    return float(C_STAR * np.sum((i + 1) * R**i * c))


def complexity_eps(phi: SmoothActivation, R: float, eps: float) -> float:
    """Approximation-complexity measure; monotone nonincreasing in eps."""
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0,1)")
    c = np.abs(np.asarray(phi.series.coefficients))
    total = 0.0
    root_log = np.sqrt(np.log(1.0 / eps))
    for i, ci in enumerate(c):
        if ci == 0.0:
            continue
        first = (C_STAR * R) ** i
        second = 1.0 if i == 0 else (root_log / np.sqrt(i) * C_STAR * R) ** i
        total += (first + second) * ci
    return float(C_STAR * total)


class TwoLayerSmoothNet:
    """out_r(x) = sum_i a[r,i] * phi[r][i](<w1[r,i], x>) (* <w2[r,i], x> if given).

    The optional second direction family w2 is the general form used by the
    existential construction; ordinary concept-class targets leave it None.

    :param a: (k, p) outer coefficients, entries in [-1, 1]
    :param w1: (k, p, d) direction vectors, each of norm `direction_norm`
    :param activations: nested sequence [k][p] of SmoothActivation
    :param direction_norm: declared norm of every direction (1/sqrt(2) or 1)
    """

    def __init__(self, a, w1, activations, direction_norm, w2=None):
        self.a = np.asarray(a, dtype=np.float64)
        self.w1 = np.asarray(w1, dtype=np.float64)
        self.w2 = None if w2 is None else np.asarray(w2, dtype=np.float64)
        self.activations = [list(row) for row in activations]
        self.direction_norm = float(direction_norm)
        k, p, d = self.w1.shape
        if self.a.shape != (k, p):
            raise ValueError("coefficient/direction shape mismatch")
        if np.max(np.abs(self.a)) > 1.0 + 1e-15:
            raise ValueError("outer coefficients must lie in [-1, 1]")
        norms = np.linalg.norm(self.w1, axis=2)
        active = np.abs(self.a) > 0
        if np.any(np.abs(norms[active] - self.direction_norm) > 1e-12):
            raise ValueError("direction vector norm violates declared convention")
        if self.w2 is not None and self.w2.shape != self.w1.shape:
            raise ValueError("w2 shape mismatch")

    @property
    def input_dim(self) -> int:
        return self.w1.shape[2]

    @property
    def output_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def width(self) -> int:
        return self.w1.shape[1]

    def __call__(self, X: np.ndarray) -> np.ndarray:
        """Evaluate on a batch X of shape (N, d); returns (N, k)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.input_dim:
            raise ValueError(f"expected input dim {self.input_dim}, got {X.shape[1]}")
        k, p, _ = self.w1.shape
        out = np.zeros((X.shape[0], k))
        for r in range(k):
            for i in range(p):
                if self.a[r, i] == 0.0:
                    continue
                term = self.activations[r][i](X @ self.w1[r, i])
                if self.w2 is not None:
                    term = term * (X @ self.w2[r, i])
                out[:, r] += self.a[r, i] * term
        return out

    def max_complexity_s(self, R: float = 1.0) -> float:
        return max(complexity_s(phi, R) for row in self.activations for phi in row)


def lipschitz_bound(net: TwoLayerSmoothNet) -> float:
    """Upper bound sqrt(k)*p*max C_s(phi,1) on the Lipschitz constant over the unit ball."""
    if not np.any(net.a):
        return 0.0
    return float(np.sqrt(net.output_dim) * net.width * net.max_complexity_s(1.0))


@dataclass(frozen=True)
class TargetFunction:
    """H(x) = beta*F(x) + alpha*G(F(x))."""

    F: TwoLayerSmoothNet
    G: TwoLayerSmoothNet
    alpha: float
    beta: float = 1.0

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise ValueError("alpha must be in [0,1)")
        if not 0 <= self.beta <= 1:
            raise ValueError("beta must be in [0,1]")
        if self.G.input_dim != self.F.output_dim:
            raise ValueError("G input dim must equal F output dim")

    @property
    def d(self) -> int:
        return self.F.input_dim

    @property
    def k(self) -> int:
        return self.G.output_dim

    def base(self, X) -> np.ndarray:
        return self.F(X)

    def composite(self, X) -> np.ndarray:
        """The alpha*G(F(x)) part alone."""
        return self.alpha * self.G(self.F(X))

    def __call__(self, X) -> np.ndarray:
        FX = self.F(X)
        return self.beta * FX + self.alpha * self.G(FX)


def eval_target(H: TargetFunction, x) -> np.ndarray:
    """Evaluate H at a single point x; returns a length-k vector."""
    return H(np.atleast_2d(x))[0]


# ---------------------------------------------------------------------------
# data distributions

_TAIL_SAMPLERS: dict = {}


def register_tail_sampler(name: str, fn) -> None:
    """Register a custom sampler fn(rng_generator, n, width) -> (n, width) array."""
    _TAIL_SAMPLERS[name] = fn


@dataclass(frozen=True)
class DataSpec:
    """Input distribution: uniform scaled cube on the first d1 coordinates,
    tail per `tail` tag, per-coordinate magnitude per `scaling`."""

    d: int
    d1: int
    tail: str = "uniform-cube"          # uniform-cube | fixed-vector | registered id
    scaling: str = "sphere"             # sphere -> +-1/sqrt(d), pm1 -> +-1
    tail_vector: tuple = field(default=())

    def __post_init__(self):
        if not 1 <= self.d1 <= self.d:
            raise ValueError("need 1 <= d1 <= d")
        if self.scaling not in ("sphere", "pm1"):
            raise ValueError(f"unknown scaling {self.scaling!r}")
        if self.tail == "fixed-vector" and len(self.tail_vector) != self.d - self.d1:
            raise ValueError("fixed-vector tail needs d - d1 values")

    @property
    def coordinate_scale(self) -> float:
        return 1.0 / np.sqrt(self.d) if self.scaling == "sphere" else 1.0

    def sample(self, n: int, rng: RngStream) -> np.ndarray:
        gen = rng.generator()
        s = self.coordinate_scale
        X = np.empty((n, self.d))
        X[:, :self.d1] = s * (2.0 * gen.integers(0, 2, size=(n, self.d1)) - 1.0)
        tail_width = self.d - self.d1
        if tail_width:
            if self.tail == "uniform-cube":
                X[:, self.d1:] = s * (2.0 * gen.integers(0, 2, size=(n, tail_width)) - 1.0)
            elif self.tail == "fixed-vector":
                X[:, self.d1:] = np.asarray(self.tail_vector)
            elif self.tail in _TAIL_SAMPLERS:
                X[:, self.d1:] = _TAIL_SAMPLERS[self.tail](gen, n, tail_width)
            else:
                raise ValueError(f"unknown tail sampler {self.tail!r}")
        return X


def cube_points(d: int, scale: float = 1.0) -> np.ndarray:
    """All 2^d points of the scaled cube; coordinate j of point n is
    +scale when bit j of n is 0, else -scale."""
    if d > 22:
        raise ValueError("cube enumeration limited to d <= 22")
    n = np.arange(1 << d)[:, None]
    bits = (n >> np.arange(d)[None, :]) & 1
    return scale * (1.0 - 2.0 * bits)


def enumerate_inputs(spec: DataSpec) -> np.ndarray:
    """Exact enumeration of the uniform block, tail appended per spec."""
    block = cube_points(spec.d1, spec.coordinate_scale)
    if spec.d == spec.d1:
        return block
    if spec.tail != "fixed-vector":
        raise ValueError("exact enumeration needs d1 == d or a fixed-vector tail")
    tail = np.broadcast_to(np.asarray(spec.tail_vector), (block.shape[0], spec.d - spec.d1))
    return np.hstack([block, tail])


def sample_dataset(spec: DataSpec, H: TargetFunction, N: int, rng: RngStream):
    """Draw N labelled points (X, Y=H(X)); deterministic in rng."""
    if N < 1:
        raise ValueError("N must be >= 1")
    X = spec.sample(N, rng)
    return X, H(X)


# ---------------------------------------------------------------------------
# parity-product instances

def parity_net(d_in: int, subsets, signs=None, scales=None,
               direction_norm: float = 1.0 / np.sqrt(2.0)) -> TwoLayerSmoothNet:
    """Exact two-layer encoding of out_r(z) = sign_r*scale_r*prod_{j in S_r} z_j.

    Width per output is 2^|S_r|; the scalar magnitude is absorbed into the
    activation coefficient so outer coefficients stay in {+-1}.
    """
    k = len(subsets)
    signs = [1.0] * k if signs is None else list(signs)
    scales = [1.0] * k if scales is None else list(scales)
    p = max(1 << len(S) for S in subsets)
    a = np.zeros((k, p))
    w1 = np.zeros((k, p, d_in))
    zero_act = monomial_activation(0, 0.0)
    activations = [[zero_act] * p for _ in range(k)]
    radius = np.sqrt(d_in) + 1.0
    for r, S in enumerate(subsets):
        S = list(S)
        q = len(S)
        coeff = scales[r] * (np.sqrt(q) / direction_norm) ** q / ((1 << q) * _factorial(q))
        phi = monomial_activation(q, coeff, radius)
        for idx in range(1 << q):
            s = 1.0 - 2.0 * ((idx >> np.arange(q)) & 1)
            a[r, idx] = signs[r] * np.prod(s)
            w1[r, idx, S] = s * direction_norm / np.sqrt(q)
            activations[r][idx] = phi
    return TwoLayerSmoothNet(a, w1, activations, direction_norm)


def _factorial(n: int) -> float:
    out = 1.0
    for i in range(2, n + 1):
        out *= i
    return out


def linear_net(d_in: int, indices, coeff: float,
               direction_norm: float = 1.0 / np.sqrt(2.0)) -> TwoLayerSmoothNet:
    """out_r(x) = coeff * x_{indices[r]}, width 1 per output."""
    k = len(indices)
    a = np.ones((k, 1))
    w1 = np.zeros((k, 1, d_in))
    phi = monomial_activation(1, coeff / direction_norm, np.sqrt(d_in) + 1.0)
    activations = [[phi] for _ in range(k)]
    for r, j in enumerate(indices):
        w1[r, 0, j] = direction_norm
    return TwoLayerSmoothNet(a, w1, activations, direction_norm)


def parity_instance(d: int, d1: int, k: int, alpha: float, indices) -> TargetFunction:
    """Hard instance: F_r(x) = (sqrt(d)/sqrt(k)) x_{i_r} (so ||F(x)|| = 1 on the
    scaled cube) and G_r(z) = (k^(k/2)/sqrt(k)) prod_j z_j, giving
    G_r(F(x)) = (1/sqrt(k)) prod_j (sqrt(d) x_{i_j})."""
    indices = [int(i) for i in indices]
    if not 2 <= k <= d1 <= d:
        raise ValueError("need 2 <= k <= d1 <= d")
    if len(indices) != k or len(set(indices)) != k:
        raise ValueError("indices must be k distinct values")
    if any(not 0 <= i < d1 for i in indices):
        raise ValueError("indices must lie in the uniform block [0, d1)")
    F = linear_net(d, indices, np.sqrt(d) / np.sqrt(k))
    scale = k ** (k / 2.0) / np.sqrt(k)
    G = parity_net(k, [list(range(k))] * k, scales=[scale] * k)
    return TargetFunction(F, G, alpha)


def pairwise_product_instance(alpha: float = 0.3, beta: float = 1.0) -> TargetFunction:
    """The d=30, k=15 instance over the +-1 cube: F(x) = (x1x2, ..., x29x30),
    G_i(y) = (-1)^i y1 y2 y3 y4."""
    F = parity_net(30, [(2 * r, 2 * r + 1) for r in range(15)])
    G = parity_net(15, [(0, 1, 2, 3)] * 15,
                   signs=[(-1.0) ** i for i in range(1, 16)])
    return TargetFunction(F, G, alpha, beta)


def pairwise_product_data_spec() -> DataSpec:
    return DataSpec(d=30, d1=30, scaling="pm1")


# ---------------------------------------------------------------------------
# serialization

def _net_to_dict(net: TwoLayerSmoothNet) -> dict:
    return {
        "d": net.input_dim,
        "k": net.output_dim,
        "p": net.width,
        "direction_norm": net.direction_norm,
        "a": net.a.tolist(),
        "w1": net.w1.tolist(),
        "w2": None if net.w2 is None else net.w2.tolist(),
        "activations": [[{"coefficients": list(phi.series.coefficients),
                          "radius": phi.series.radius,
                          "odd_and_zero_only": phi.odd_and_zero_only}
                         for phi in row] for row in net.activations],
    }


def _net_from_dict(doc: dict) -> TwoLayerSmoothNet:
    acts = [[SmoothActivation(TaylorSeries(tuple(a["coefficients"]), a["radius"]),
                              a["odd_and_zero_only"]) for a in row]
            for row in doc["activations"]]
    return TwoLayerSmoothNet(doc["a"], doc["w1"], acts, doc["direction_norm"],
                             w2=doc["w2"])


def instance_to_json(H: TargetFunction, d1: int, scaling: str) -> str:
    doc = {
        "d": H.d,
        "d1": d1,
        "k": H.k,
        "alpha": H.alpha,
        "beta": H.beta,
        "F": _net_to_dict(H.F),
        "G": _net_to_dict(H.G),
        "scaling": scaling,
    }
    return json.dumps(doc)


def instance_from_json(text: str):
    doc = json.loads(text)
    H = TargetFunction(_net_from_dict(doc["F"]), _net_from_dict(doc["G"]),
                       doc["alpha"], doc["beta"])
    return H, doc["d1"], doc["scaling"]


def save_dataset_csv(path, X: np.ndarray, Y: np.ndarray) -> None:
    d, k = X.shape[1], Y.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x_{i+1}" for i in range(d)] + [f"y_{j+1}" for j in range(k)])
        for xrow, yrow in zip(X, Y):
            writer.writerow([repr(float(v)) for v in xrow]
                            + [repr(float(v)) for v in yrow])


def load_dataset_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = sum(1 for h in header if h.startswith("x_"))
        rows = np.array([[float(v) for v in row] for row in reader])
    if rows.size == 0:
        rows = rows.reshape(0, len(header))
    return rows[:, :d], rows[:, d:]
