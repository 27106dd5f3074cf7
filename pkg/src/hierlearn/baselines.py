"""Kernel-method and fully-connected baselines.

Kernel regression follows the anchor form K_j(x) = sum_n K(x, x^(n)) w_{j,n}
with the RKHS ridge regularizer lambda * w^T K w by default (plain l2-on-w is
available behind a flag).  The conjugate-kernel baseline trains only the last
layer of a random net; the NTK baseline trains the linearization of a net at
its initialization with the same SGD protocol as every other trainer.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .core import RngStream, gaussian_matrix, solve_psd, DecompositionError
from .resnet import RunRecord, TrainConfig, TrainingDivergedError, empirical_risk


class UndefinedKernelError(Exception):
    pass


# ---------------------------------------------------------------------------
# kernels

@dataclass(frozen=True)
class KernelSpec:
    """kind is one of gaussian|arcsin|conjugate|ntk|gram.

    gaussian carries bandwidth h; conjugate/ntk carry a frozen net reference;
    gram carries an explicit matrix (anchors implied by position).
    """

    kind: str
    h: float = 1.0
    net: object = None
    trainable: str = "all"
    gram: object = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "arcsin", "conjugate", "ntk", "gram"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian" and self.h <= 0:
            raise ValueError("gaussian bandwidth must be positive")
        if self.kind in ("conjugate", "ntk") and self.net is None:
            raise ValueError(f"{self.kind} kernel needs a frozen net reference")


def kernel_gram(spec: KernelSpec, X: np.ndarray, Xp: np.ndarray = None) -> np.ndarray:
    """Gram matrix K(x_i, x'_j); NTK entries are parameter-gradient inner
    products at initialization, summed over output coordinates."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Xp = X if Xp is None else np.atleast_2d(np.asarray(Xp, dtype=np.float64))
    if spec.kind == "gaussian":
        sq = (np.sum(X**2, axis=1)[:, None] + np.sum(Xp**2, axis=1)[None, :]
              - 2.0 * X @ Xp.T)
        return np.exp(-np.maximum(sq, 0.0) / spec.h)
    if spec.kind == "arcsin":
        nx = np.linalg.norm(X, axis=1)
        ny = np.linalg.norm(Xp, axis=1)
        if np.any(nx == 0) or np.any(ny == 0):
            raise UndefinedKernelError("arcsin kernel undefined on zero rows")
        cos = (X @ Xp.T) / np.outer(nx, ny)
        return np.arcsin(np.clip(cos, -1.0, 1.0))
    if spec.kind == "conjugate":
        return spec.net.hidden_features(X) @ spec.net.hidden_features(Xp).T
    if spec.kind == "ntk":
        FX = ntk_features(spec.net, X, spec.trainable)
        FY = FX if Xp is X else ntk_features(spec.net, Xp, spec.trainable)
        # (N, k, P) x (M, k, P) summed over outputs and parameters
        return np.einsum("nkp,mkp->nm", FX, FY)
    if spec.kind == "gram":
        return np.asarray(spec.gram, dtype=np.float64)
    raise AssertionError


class KernelPredictor:
    """Anchors + per-output weight vectors; predicts sum_n w_n K(x, x_n)."""

    def __init__(self, spec: KernelSpec, anchors: np.ndarray, weights: np.ndarray,
                 pinv_fallback: bool = False):
        self.spec = spec
        self.anchors = np.atleast_2d(np.asarray(anchors, dtype=np.float64))
        self.weights = np.atleast_2d(np.asarray(weights, dtype=np.float64))
        self.pinv_fallback = pinv_fallback

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return kernel_gram(self.spec, np.atleast_2d(X), self.anchors) @ self.weights

    def save(self, path: str) -> None:
        header = {"kind": self.spec.kind, "h": self.spec.h,
                  "n_anchors": self.anchors.shape[0], "d": self.anchors.shape[1],
                  "k": self.weights.shape[1], "pinv_fallback": self.pinv_fallback}
        with open(path + ".json", "w") as fh:
            json.dump(header, fh)
        with open(path, "wb") as fh:
            fh.write(self.anchors.astype("<f8").tobytes())
            fh.write(self.weights.astype("<f8").tobytes())


def load_kernel_predictor(path: str) -> KernelPredictor:
    with open(path + ".json") as fh:
        meta = json.load(fh)
    n, d, k = meta["n_anchors"], meta["d"], meta["k"]
    with open(path, "rb") as fh:
        anchors = np.frombuffer(fh.read(8 * n * d), dtype="<f8").reshape(n, d).copy()
        weights = np.frombuffer(fh.read(8 * n * k), dtype="<f8").reshape(n, k).copy()
    return KernelPredictor(KernelSpec(meta["kind"], h=meta["h"]), anchors, weights,
                           meta["pinv_fallback"])


def kernel_regress(spec: KernelSpec, X: np.ndarray, Y: np.ndarray,
                   ridge: float = 0.0, l2_on_w: bool = False) -> KernelPredictor:
    """Fit anchor weights by the regularized convex problem.

    RKHS ridge (default): w = (K + ridge*I)^{-1} Y.
    l2-on-w: w = (K^T K + ridge*I)^{-1} K^T Y.
    Singular systems at ridge=0 fall back to a pseudo-inverse with a warning.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    K = kernel_gram(spec, X)
    K = 0.5 * (K + K.T)
    fallback = False
    try:
        if l2_on_w:
            W = solve_psd(K.T @ K, K.T @ Y, ridge)
        else:
            W = solve_psd(K, Y, ridge)
    except DecompositionError:
        warnings.warn("singular kernel system; using pseudo-inverse fallback")
        fallback = True
        W = np.linalg.pinv(K + ridge * np.eye(K.shape[0])) @ Y
    return KernelPredictor(spec, X, W, pinv_fallback=fallback)


def kernel_predict(pred: KernelPredictor, x) -> np.ndarray:
    return pred(np.atleast_2d(x))[0]


# ---------------------------------------------------------------------------
# fully-connected nets

def _aug(X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return np.hstack([X, np.ones((X.shape[0], 1))])


class FullyConnectedNet:
    """Depth-2 or depth-3 ReLU net with biases absorbed into the matrices."""

    def __init__(self, weights, trainable: str = "all"):
        self.weights = [np.asarray(W, dtype=np.float64) for W in weights]
        self.depth = len(self.weights)
        if self.depth not in (2, 3):
            raise ValueError("depth must be 2 or 3")
        if trainable not in ("all", "hidden", "last"):
            raise ValueError(f"unknown trainable set {trainable!r}")
        self.trainable = trainable
        self.init_weights = [W.copy() for W in self.weights]

    @property
    def d(self) -> int:
        return self.weights[0].shape[1] - 1

    @property
    def k(self) -> int:
        return self.weights[-1].shape[0]

    def trainable_mask(self):
        if self.trainable == "all":
            return [True] * self.depth
        if self.trainable == "hidden":
            return [True] * (self.depth - 1) + [False]
        return [False] * (self.depth - 1) + [True]

    def forward(self, X):
        """Returns (out, caches); caches hold augmented layer inputs and masks."""
        a = _aug(X)
        inputs, masks = [a], []
        for W in self.weights[:-1]:
            z = a @ W.T
            masks.append(z >= 0.0)
            a = _aug(np.maximum(z, 0.0))
            inputs.append(a)
        out = a @ self.weights[-1].T
        return out, {"inputs": inputs, "masks": masks}

    def __call__(self, X):
        return self.forward(X)[0]

    def hidden_features(self, X):
        """Augmented last hidden layer (the conjugate-kernel feature map)."""
        return self.forward(X)[1]["inputs"][-1]

    def gradient(self, X, Y, weights=None):
        """Per-layer grads of mean 1/2||y-out||^2; optionally at other weights
        with this net's architecture (used by the linearized trainer)."""
        W = self.weights if weights is None else weights
        a = _aug(X)
        inputs, masks = [a], []
        for Wl in W[:-1]:
            z = a @ Wl.T
            masks.append(z >= 0.0)
            a = _aug(np.maximum(z, 0.0))
            inputs.append(a)
        out = a @ W[-1].T
        return self._backward(out, Y, inputs, masks, W), out

    def _backward(self, out, Y, inputs, masks, W):
        n = out.shape[0]
        delta = (out - np.atleast_2d(Y)) / n
        grads = [None] * self.depth
        grads[-1] = delta.T @ inputs[-1]
        for l in range(self.depth - 2, -1, -1):
            delta = (delta @ W[l + 1])[:, :-1] * masks[l]
            grads[l] = delta.T @ inputs[l]
        return grads


def init_fc(d: int, k: int, widths, rng: RngStream,
            trainable: str = "all") -> FullyConnectedNet:
    """Practice-style init: std 1/(sqrt(fan_in)+sqrt(fan_out)) per matrix."""
    dims = [d] + list(widths) + [k]
    weights = []
    for l in range(len(dims) - 1):
        fin, fout = dims[l] + 1, dims[l + 1]
        std = 1.0 / (np.sqrt(fin) + np.sqrt(fout))
        weights.append(gaussian_matrix(rng.child(l), fout, fin, std))
    return FullyConnectedNet(weights, trainable)


def ntk_features(net, X, trainable: str = "all") -> np.ndarray:
    """Flattened parameter gradient of each output coordinate at init.

    Returns (N, k, P) where P counts parameters in the trainable set.  Meant
    for modest sizes; the NTK *trainer* below never materializes this.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n, k = X.shape[0], net.k
    out, c = net.forward(X)
    sel = {"all": [True] * net.depth,
           "hidden": [True] * (net.depth - 1) + [False],
           "last": [False] * (net.depth - 1) + [True]}[trainable]
    blocks = []
    for r in range(k):
        # backprop a unit vector e_r through the cached computation
        delta = np.zeros((n, k))
        delta[:, r] = 1.0
        grads = []
        d = delta
        grads.append(np.einsum("ni,nj->nij", d, c["inputs"][-1]))
        for l in range(net.depth - 2, -1, -1):
            d = (d @ net.weights[l + 1])[:, :-1] * c["masks"][l]
            grads.append(np.einsum("ni,nj->nij", d, c["inputs"][l]))
        grads = grads[::-1]
        row = [g.reshape(n, -1) for g, keep in zip(grads, sel) if keep]
        blocks.append(np.hstack(row))
    return np.stack(blocks, axis=1)


class NTKLinearModel:
    """The linearization of an FC net at its init: f(x) = f0(x) + <J(x), delta>.

    Training this model by SGD is the NTK baseline; the delta parameters share
    the net's layer shapes and the Jacobian uses the frozen init masks.
    """

    def __init__(self, net: FullyConnectedNet, trainable: str = "all"):
        self.net = net
        self.trainable = trainable
        self.delta = [np.zeros_like(W) for W in net.weights]

    def _lin_forward(self, X):
        net = self.net
        a = _aug(X)
        inputs, masks = [a], []
        da = np.zeros_like(a)
        for l, W in enumerate(net.weights[:-1]):
            z = a @ W.T
            mask = z >= 0.0
            dz = (da @ W.T + a @ self.delta[l].T) * mask
            masks.append(mask)
            a = _aug(np.maximum(z, 0.0))
            da = np.hstack([dz, np.zeros((dz.shape[0], 1))])
            inputs.append(a)
        out = a @ net.weights[-1].T + da @ net.weights[-1].T + a @ self.delta[-1].T
        return out, {"inputs": inputs, "masks": masks}

    def __call__(self, X):
        return self._lin_forward(np.atleast_2d(X))[0]

    def gradient(self, X, Y):
        """Grads of mean 1/2||y-f_lin||^2 w.r.t. delta: J^T residual, which is
        ordinary backprop through the frozen init net."""
        out, c = self._lin_forward(np.atleast_2d(X))
        n = out.shape[0]
        delta = (out - np.atleast_2d(Y)) / n
        grads = [None] * self.net.depth
        grads[-1] = delta.T @ c["inputs"][-1]
        for l in range(self.net.depth - 2, -1, -1):
            delta = (delta @ self.net.weights[l + 1])[:, :-1] * c["masks"][l]
            grads[l] = delta.T @ c["inputs"][l]
        return grads


# ---------------------------------------------------------------------------
# shared minibatch trainer for FC / NTK models

def _momentum_train(params, grad_fn, predict, cfg: TrainConfig, rng: RngStream,
                    data, test_data, eval_every, trainable_mask, init_params):
    X, Y = data
    X = np.asarray(X, dtype=np.float64)
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    n = X.shape[0]
    eval_every = eval_every or max(1, cfg.T // 20)
    mom = [np.zeros_like(p) for p in params]
    order_rng = rng.child(0).generator()
    records = []
    step = 0
    for epoch in range(cfg.T):
        drop = cfg.lr_drop_factor if (cfg.lr_drop_epoch and epoch >= cfg.lr_drop_epoch) else 1.0
        lr = cfg.eta_w / drop
        perm = order_rng.permutation(n)
        for lo in range(0, n, cfg.batch):
            idx = perm[lo: lo + cfg.batch]
            grads = grad_fn(X[idx], Y[idx])
            for l, (p, g, on) in enumerate(zip(params, grads, trainable_mask)):
                if not on:
                    continue
                if cfg.weight_decay:
                    g = g + cfg.weight_decay * p
                mom[l] = cfg.momentum * mom[l] + g
                p -= lr * mom[l]
            step += 1
        if not all(np.isfinite(p).all() for p in params):
            raise TrainingDivergedError(step)
        if (epoch + 1) % eval_every == 0 or epoch == cfg.T - 1:
            train = empirical_risk(predict, X, Y)
            test = empirical_risk(predict, *test_data) if test_data is not None else np.nan
            if not np.isfinite(train):
                raise TrainingDivergedError(step)
            d0 = float(np.linalg.norm(params[0] - init_params[0]))
            d1 = float(np.linalg.norm(params[-1] - init_params[-1]))
            records.append(RunRecord(epoch + 1, train, test, d0, d1,
                                     0.0, 0.0, lr, lr))
    return records


def train_fc(net: FullyConnectedNet, data, cfg: TrainConfig, rng: RngStream,
             test_data=None, eval_every: int = None):
    """Minibatch momentum SGD on the net's trainable layers."""
    if cfg.mode != "practice":
        raise ValueError("train_fc runs in practice mode")
    return _momentum_train(net.weights,
                           lambda Xb, Yb: net.gradient(Xb, Yb)[0],
                           net, cfg, rng, data, test_data, eval_every,
                           net.trainable_mask(), net.init_weights)


def train_ntk(model: NTKLinearModel, data, cfg: TrainConfig, rng: RngStream,
              test_data=None, eval_every: int = None):
    """Minibatch momentum SGD on the linearized net (the NTK baseline)."""
    if cfg.mode != "practice":
        raise ValueError("train_ntk runs in practice mode")
    mask = {"all": [True] * model.net.depth,
            "hidden": [True] * (model.net.depth - 1) + [False],
            "last": [False] * (model.net.depth - 1) + [True]}[model.trainable]
    zeros = [np.zeros_like(p) for p in model.delta]
    return _momentum_train(model.delta, model.gradient, model, cfg, rng,
                           data, test_data, eval_every, mask, zeros)


def conjugate_fit(net: FullyConnectedNet, X, Y, ridge: float = 1e-8):
    """Exact convex optimum of last-layer-only training (the conjugate-kernel
    regression): ridge least squares on the hidden features."""
    Phi = net.hidden_features(X)                     # (N, m+1)
    G = Phi.T @ Phi
    Wlast = solve_psd(G, Phi.T @ np.atleast_2d(Y), ridge).T
    fitted = FullyConnectedNet([W.copy() for W in net.weights], trainable="last")
    fitted.weights[-1] = Wlast
    return fitted
