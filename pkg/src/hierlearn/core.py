"""Deterministic seeded randomness and small dense linear algebra.

Everything downstream that needs randomness takes an :class:`RngStream`, a
value object naming a (seed, stream-id) pair of a counter-based generator.
Two streams with the same pair produce bit-identical draws regardless of
process, thread count or call order, which is what makes the experiment
harness reproducible under ``--threads``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class DecompositionError(Exception):
    """Raised when a matrix that must be positive definite is not."""


_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    # Finalizer of the splitmix64 generator; a good 64-bit mixing function.
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class RngStream:
    """Immutable handle on a counter-based random stream.

    ``seed`` is the user-facing experiment seed; ``stream`` separates
    independent consumers (weight init, data sampling, minibatch order, ...).
    Deriving children with distinct indices gives pairwise independent
    streams by construction of the underlying Philox generator.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream", int(self.stream) & _MASK64)

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return np.random.Generator(np.random.Philox(key=[self.seed, self.stream]))

    def child(self, index: int) -> "RngStream":
        """Derive the ``index``-th child stream."""
        mixed = _splitmix64(self.stream ^ _splitmix64((int(index) + 1) & _MASK64))
        return RngStream(self.seed, mixed)


def gaussian_matrix(rng: RngStream, rows: int, cols: int, std: float) -> np.ndarray:
    """An i.i.d. zero-mean Gaussian matrix with the given entry deviation."""
    if std < 0:
        raise ValueError("std must be nonnegative")
    if std == 0.0:
        return np.zeros((rows, cols))
    return rng.generator().normal(0.0, std, size=(rows, cols))


def solve_psd(G: np.ndarray, b: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Solve (G + ridge*I) x = b for symmetric positive definite G + ridge*I.

    Uses a Cholesky factorization plus one step of iterative refinement and
    verifies the relative residual is at most 1e-10.
    """
    G = np.asarray(G, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = G.shape[0]
    if G.shape != (n, n):
        raise ValueError("G must be square")
    A = G + ridge * np.eye(n) if ridge != 0.0 else G
    try:
        factor = cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"matrix not positive definite: {exc}") from exc
    x = cho_solve(factor, b, check_finite=False)
    # One round of iterative refinement; repeat once more if still above the
    # contract residual (helps ill-conditioned Gram matrices).
    bnorm = np.linalg.norm(b)
    for _ in range(2):
        r = b - A @ x
        if bnorm == 0.0 or np.linalg.norm(r) <= 1e-10 * bnorm:
            break
        x = x + cho_solve(factor, r, check_finite=False)
    resid = np.linalg.norm(b - A @ x)
    if bnorm > 0 and resid > 1e-10 * bnorm:
        raise DecompositionError(
            f"residual {resid / bnorm:.3e} exceeds 1e-10; matrix too ill-conditioned"
        )
    return x
