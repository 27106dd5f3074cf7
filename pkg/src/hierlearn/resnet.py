"""Three-layer single-skip ResNet learner, exact gradients, and SGD trainers.

The learner, after the bottleneck reparameterization of the middle weight,
computes (with inputs augmented to (x, 1) so biases live inside the matrices)

    out1(x) = A @ relu((W0 + W) (x, 1))
    out(x)  = out1(x) + A @ relu((V0 + V) (out1(x), 1))

A, W0 and V0 are frozen draws recorded at init; W and V start at zero and are
the trainable matrices in theory mode.  Practice mode may also train A.
The ReLU subgradient at 0 is taken to be 1 so that activation-pattern
diagnostics (the indicator diag{1[. >= 0]}) and gradients agree exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import RngStream, gaussian_matrix
from .concept import DataSpec, TargetFunction, enumerate_inputs


class TrainingDivergedError(Exception):
    def __init__(self, step: int):
        super().__init__(f"loss became non-finite at step {step}")
        self.step = step


def _augment(X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return np.hstack([X, np.ones((X.shape[0], 1))])


class ResNetModel:
    """Weights and init scales of the learner; see module docstring."""

    def __init__(self, d, k, m, A, W0, V0, sigma_w, sigma_v, tau_w, tau_v):
        self.d, self.k, self.m = int(d), int(k), int(m)
        self.A = np.asarray(A, dtype=np.float64)
        self.W0 = np.asarray(W0, dtype=np.float64)
        self.V0 = np.asarray(V0, dtype=np.float64)
        self.W = np.zeros((m, d + 1))
        self.V = np.zeros((m, k + 1))
        self.sigma_w, self.sigma_v = float(sigma_w), float(sigma_v)
        self.tau_w, self.tau_v = float(tau_w), float(tau_v)
        assert self.A.shape == (k, m)
        assert self.W0.shape == (m, d + 1)
        assert self.V0.shape == (m, k + 1)
        self.step = 0

    def copy(self) -> "ResNetModel":
        out = ResNetModel(self.d, self.k, self.m, self.A.copy(), self.W0.copy(),
                          self.V0.copy(), self.sigma_w, self.sigma_v,
                          self.tau_w, self.tau_v)
        out.W = self.W.copy()
        out.V = self.V.copy()
        out.step = self.step
        return out

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return forward(self, X)[1]


def default_theory_scales(m: int):
    """(sigma_w, sigma_v, tau_w, tau_v) defaults for theory mode."""
    return m ** (-1 / 8), m ** (1 / 8), m ** 0.05, m ** (-1 / 16)


def check_parameter_regime(m: int, k: int, sigma_w: float, sigma_v: float,
                           tau_w: float, tau_v: float) -> list:
    """Constraint checks on the norm caps; returns a list of violation strings."""
    problems = []
    if tau_w < 1:
        problems.append(f"tau_w={tau_w:g} < 1")
    lo_w, hi_w = m ** (1 / 8 + 0.001) * sigma_w, m ** (1 / 8 - 0.001) * sigma_w ** 0.25
    if not lo_w <= tau_w <= hi_w:
        problems.append(f"tau_w={tau_w:g} outside [{lo_w:g}, {hi_w:g}]")
    lo_v, hi_v = sigma_v * (k / m) ** (3 / 8), sigma_v
    if not lo_v <= tau_v <= hi_v:
        problems.append(f"tau_v={tau_v:g} outside [{lo_v:g}, {hi_v:g}]")
    return problems


def init(d: int, k: int, m: int, rng: RngStream, style: str = "theory",
         sigma_w: float = None, sigma_v: float = None,
         tau_w: float = None, tau_v: float = None,
         mean_one: bool = False) -> ResNetModel:
    """Initialize a model.

    theory style: A ~ N(0, 1/m), W0 ~ N(0, sigma_w^2), V0 ~ N(0, sigma_v^2/m).
    practice style: every matrix uses std 1/(sqrt(fan_in)+sqrt(fan_out));
    `mean_one` opts into a mean-1 law for the hidden matrices instead of the
    default zero mean.
    """
    if not (m >= 1 and m >= k >= 1):
        raise ValueError("need m >= k >= 1")
    dw, dv, dtw, dtv = default_theory_scales(m)
    sigma_w = dw if sigma_w is None else sigma_w
    sigma_v = dv if sigma_v is None else sigma_v
    tau_w = dtw if tau_w is None else tau_w
    tau_v = dtv if tau_v is None else tau_v
    if style == "theory":
        A = gaussian_matrix(rng.child(0), k, m, 1.0 / np.sqrt(m))
        W0 = gaussian_matrix(rng.child(1), m, d + 1, sigma_w)
        V0 = gaussian_matrix(rng.child(2), m, k + 1, sigma_v / np.sqrt(m))
    elif style == "practice":
        def fan_std(fin, fout):
            return 1.0 / (np.sqrt(fin) + np.sqrt(fout))
        A = gaussian_matrix(rng.child(0), k, m, fan_std(m, k))
        W0 = gaussian_matrix(rng.child(1), m, d + 1, fan_std(d + 1, m))
        V0 = gaussian_matrix(rng.child(2), m, k + 1, fan_std(k + 1, m))
        if mean_one:
            W0 = W0 + 1.0
            V0 = V0 + 1.0
    else:
        raise ValueError(f"unknown init style {style!r}")
    return ResNetModel(d, k, m, A, W0, V0, sigma_w, sigma_v, tau_w, tau_v)


def forward(model: ResNetModel, X: np.ndarray):
    """Batched forward pass; returns (out1, out, caches)."""
    Xa = _augment(X)
    if Xa.shape[1] != model.d + 1:
        raise ValueError(f"expected input dim {model.d}, got {Xa.shape[1] - 1}")
    pre1 = Xa @ (model.W0 + model.W).T              # (N, m)
    h1 = np.maximum(pre1, 0.0)
    out1 = h1 @ model.A.T                           # (N, k)
    o1a = _augment(out1)
    pre2 = o1a @ (model.V0 + model.V).T             # (N, m)
    h2 = np.maximum(pre2, 0.0)
    out = out1 + h2 @ model.A.T
    caches = {"Xa": Xa, "pre1": pre1, "h1": h1, "o1a": o1a, "pre2": pre2, "h2": h2}
    return out1, out, caches


def gradient(model: ResNetModel, X, Y, with_A: bool = False):
    """Exact (sub)gradients of Obj = mean over the batch of 1/2 ||y - out(x)||^2.

    Both the skip path and the second-layer path through out1 are included.
    Returns (gradW, gradV) or (gradW, gradV, gradA).
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    _, out, c = forward(model, X)
    n = out.shape[0]
    dOut = (out - Y) / n                            # (N, k)
    mask2 = c["pre2"] >= 0.0
    dpre2 = (dOut @ model.A) * mask2                # (N, m)
    gradV = dpre2.T @ c["o1a"]
    Vk = (model.V0 + model.V)[:, : model.k]         # out1 columns of layer 2
    dout1 = dOut + dpre2 @ Vk                       # skip + second-layer path
    mask1 = c["pre1"] >= 0.0
    dpre1 = (dout1 @ model.A) * mask1
    gradW = dpre1.T @ c["Xa"]
    if not with_A:
        return gradW, gradV
    gradA = dOut.T @ c["h2"] + dout1.T @ c["h1"]
    return gradW, gradV, gradA


def coupling_diagnostics(model: ResNetModel, X) -> dict:
    """Activation-pattern drift from initialization, plus weight norms.

    Counts coordinates whose layer-1 indicator 1[(W0+W)(x,1) >= 0] differs
    from the init-time 1[W0 (x,1) >= 0], and the same at layer 2 evaluated at
    the current out1.  With a batch, counts are averaged over the rows.
    """
    Xa = _augment(X)
    pre1 = Xa @ (model.W0 + model.W).T
    pre1_0 = Xa @ model.W0.T
    flips1 = np.mean(np.sum((pre1 >= 0) != (pre1_0 >= 0), axis=1))
    out1 = np.maximum(pre1, 0.0) @ model.A.T
    o1a = _augment(out1)
    pre2 = o1a @ (model.V0 + model.V).T
    pre2_0 = o1a @ model.V0.T
    flips2 = np.mean(np.sum((pre2 >= 0) != (pre2_0 >= 0), axis=1))
    frob_W = float(np.linalg.norm(model.W))
    frob_V = float(np.linalg.norm(model.V))
    spec_W = float(np.linalg.norm(model.W, 2)) if model.W.any() else 0.0
    spec_V = float(np.linalg.norm(model.V, 2)) if model.V.any() else 0.0
    return {
        "flips1": float(flips1),
        "flips2": float(flips2),
        "frob_W": frob_W,
        "frob_V": frob_V,
        "spec_W": spec_W,
        "spec_V": spec_V,
        "tau_w_violated": spec_W > model.tau_w,
        "tau_v_violated": spec_V > model.tau_v,
    }


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings for both trainers.

    theory mode: T is a step count; plain SGD on (W, V) with one fresh sample
    per step.  practice mode: T is an epoch count over a fixed dataset with
    minibatches, momentum and optional weight decay.
    """

    mode: str = "practice"              # theory | practice
    eta_w: float = 0.1
    eta_v: float = 0.1
    T: int = 800
    batch: int = 50
    momentum: float = 0.9
    weight_decay: float = 0.0
    lr_drop_epoch: int = 400
    lr_drop_factor: float = 10.0
    trainable: str = "hidden"           # hidden | all

    def __post_init__(self):
        if self.mode not in ("theory", "practice"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "theory":
            if self.batch != 1 or self.momentum != 0.0 or self.weight_decay != 0.0 \
                    or self.trainable != "hidden":
                raise ValueError("theory mode forces batch=1, momentum=0, "
                                 "weight_decay=0, trainable='hidden'")
        if self.eta_w < 0 or self.eta_v < 0:
            raise ValueError("learning rates must be nonnegative")


def theory_config(eta_w: float, eta_v: float, T: int) -> TrainConfig:
    return TrainConfig(mode="theory", eta_w=eta_w, eta_v=eta_v, T=T,
                       batch=1, momentum=0.0, weight_decay=0.0, trainable="hidden")


@dataclass
class RunRecord:
    step_or_epoch: int
    train_risk: float
    test_risk: float
    frob_W: float
    frob_V: float
    flips1: float
    flips2: float
    lr_w: float
    lr_v: float

    CSV_COLUMNS = ("step_or_epoch", "train_risk", "test_risk", "frob_W",
                   "frob_V", "flips1", "flips2", "lr_w", "lr_v")

    def csv_row(self):
        return [repr(getattr(self, c)) if isinstance(getattr(self, c), float)
                else str(getattr(self, c)) for c in self.CSV_COLUMNS]


def empirical_risk(predict, X, Y) -> float:
    """Mean squared error E||y - out(x)||^2 (no 1/2 factor)."""
    out = predict(X)
    return float(np.mean(np.sum((np.atleast_2d(Y) - out) ** 2, axis=1)))


def population_risk(predict, H: TargetFunction, spec: DataSpec,
                    eval_mode: str = "exact", mc_n: int = 100000,
                    rng: RngStream = None) -> float:
    """Population risk of any predictor against H under spec's distribution.

    eval_mode 'exact' enumerates the full uniform block (d <= 22);
    'mc' averages mc_n fresh samples drawn from rng.
    """
    if eval_mode == "exact":
        if spec.d1 > 22:
            raise ValueError("exact enumeration limited to d1 <= 22")
        X = enumerate_inputs(spec)
    elif eval_mode == "mc":
        if rng is None:
            raise ValueError("mc mode needs an rng")
        X = spec.sample(mc_n, rng)
    else:
        raise ValueError(f"unknown eval mode {eval_mode!r}")
    return empirical_risk(predict, X, H(X))


def _record(model, epoch, train, test, lr_w, lr_v, probe_X) -> RunRecord:
    diag = coupling_diagnostics(model, probe_X)
    return RunRecord(epoch, train, test, diag["frob_W"], diag["frob_V"],
                     diag["flips1"], diag["flips2"], lr_w, lr_v)


def sgd_train(model: ResNetModel, source, cfg: TrainConfig, rng: RngStream,
              test_data=None, eval_every: int = None):
    """Train `model` in place; returns the trajectory of RunRecords.

    `source` is a fixed dataset (X, Y) in practice mode, or a callable
    sampler(n, rng) -> (X, Y) in theory mode (fresh sample each step).
    `test_data`, when given, is a fixed (X, Y) pair used for test risk.
    """
    if cfg.mode == "theory":
        return _train_theory(model, source, cfg, rng, test_data, eval_every)
    return _train_practice(model, source, cfg, rng, test_data, eval_every)


def _eval_pair(model, train_pair, test_data):
    train = empirical_risk(model, *train_pair) if train_pair is not None else np.nan
    test = empirical_risk(model, *test_data) if test_data is not None else np.nan
    return train, test


def _train_theory(model, sampler, cfg, rng, test_data, eval_every):
    if not callable(sampler):
        raise ValueError("theory mode requires a fresh-sample source (callable)")
    eval_every = eval_every or max(1, cfg.T // 20)
    probe_X, _ = sampler(32, rng.child(1))
    records = []
    eval_pair = sampler(1024, rng.child(2))
    for t in range(cfg.T):
        X, Y = sampler(1, rng.child(3).child(t))
        gradW, gradV = gradient(model, X, Y)
        model.W -= cfg.eta_w * gradW
        model.V -= cfg.eta_v * gradV
        model.step += 1
        if not (np.isfinite(model.W).all() and np.isfinite(model.V).all()):
            raise TrainingDivergedError(t)
        if (t + 1) % eval_every == 0 or t == cfg.T - 1:
            train, test = _eval_pair(model, eval_pair, test_data)
            records.append(_record(model, t + 1, train, test,
                                   cfg.eta_w, cfg.eta_v, probe_X))
    return records


def _train_practice(model, data, cfg, rng, test_data, eval_every):
    X, Y = data
    X = np.asarray(X, dtype=np.float64)
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    n = X.shape[0]
    eval_every = eval_every or max(1, cfg.T // 20)
    probe_X = X[: min(32, n)]
    train_A = cfg.trainable == "all"
    mom_W = np.zeros_like(model.W)
    mom_V = np.zeros_like(model.V)
    mom_A = np.zeros_like(model.A)
    order_rng = rng.child(0).generator()
    records = []
    for epoch in range(cfg.T):
        drop = cfg.lr_drop_factor if (cfg.lr_drop_epoch and epoch >= cfg.lr_drop_epoch) else 1.0
        lr_w, lr_v = cfg.eta_w / drop, cfg.eta_v / drop
        perm = order_rng.permutation(n)
        for lo in range(0, n, cfg.batch):
            idx = perm[lo: lo + cfg.batch]
            grads = gradient(model, X[idx], Y[idx], with_A=train_A)
            gradW, gradV = grads[0], grads[1]
            if cfg.weight_decay:
                gradW = gradW + cfg.weight_decay * model.W
                gradV = gradV + cfg.weight_decay * model.V
            mom_W = cfg.momentum * mom_W + gradW
            mom_V = cfg.momentum * mom_V + gradV
            model.W -= lr_w * mom_W
            model.V -= lr_v * mom_V
            if train_A:
                gradA = grads[2]
                if cfg.weight_decay:
                    gradA = gradA + cfg.weight_decay * model.A
                mom_A = cfg.momentum * mom_A + gradA
                model.A = model.A - lr_w * mom_A
            model.step += 1
        if not (np.isfinite(model.W).all() and np.isfinite(model.V).all()
                and np.isfinite(model.A).all()):
            raise TrainingDivergedError(model.step)
        if (epoch + 1) % eval_every == 0 or epoch == cfg.T - 1:
            train, test = _eval_pair(model, (X, Y), test_data)
            if not np.isfinite(train):
                raise TrainingDivergedError(model.step)
            records.append(_record(model, epoch + 1, train, test, lr_w, lr_v, probe_X))
    return records


# ---------------------------------------------------------------------------
# checkpoint serialization: flat little-endian float64 + JSON sidecar

def save_checkpoint(model: ResNetModel, path: str) -> None:
    blocks = [model.A, model.W0, model.V0, model.W, model.V]
    with open(path, "wb") as fh:
        for b in blocks:
            fh.write(b.astype("<f8").tobytes())
    sidecar = {
        "d": model.d, "k": model.k, "m": model.m,
        "sigma_w": model.sigma_w, "sigma_v": model.sigma_v,
        "tau_w": model.tau_w, "tau_v": model.tau_v,
        "step": model.step,
    }
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh)


def load_checkpoint(path: str) -> ResNetModel:
    with open(path + ".json") as fh:
        meta = json.load(fh)
    d, k, m = meta["d"], meta["k"], meta["m"]
    shapes = [(k, m), (m, d + 1), (m, k + 1), (m, d + 1), (m, k + 1)]
    blocks = []
    with open(path, "rb") as fh:
        for shape in shapes:
            count = shape[0] * shape[1]
            raw = fh.read(8 * count)
            blocks.append(np.frombuffer(raw, dtype="<f8").reshape(shape).copy())
    A, W0, V0, W, V = blocks
    model = ResNetModel(d, k, m, A, W0, V0, meta["sigma_w"], meta["sigma_v"],
                        meta["tau_w"], meta["tau_v"])
    model.W, model.V = W, V
    model.step = meta["step"]
    return model
