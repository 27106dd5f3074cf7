"""Experiment orchestration: configs, suites, and CSV/JSON persistence.

A suite run loads a TOML config, executes its grid of (algorithm, width,
seed) cells sequentially with a per-cell rng derived from (seed, cell index),
and writes sorted CSV bodies plus a JSON metadata sidecar.  Timestamps and
wall-clock live only in the metadata file so reruns with the same config are
byte-identical on the CSV side.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

try:                                    # stdlib from 3.11 on
    import tomllib as tomli
except ModuleNotFoundError:
    import tomli

from .core import RngStream
from . import resnet as _rn
from . import baselines as _bl
from . import lowerbound as _lb
from . import hermite as _hm
from .concept import (DataSpec, cube_points, pairwise_product_instance,
                      parity_instance, pairwise_product_data_spec)

RISK_CONVENTION = "E||y - out(x)||^2 (no 1/2 factor)"

SUITES = ("exp1", "exp2", "mincomplexity", "separation", "hermite-verify")

EXP1_COLUMNS = ["tag", "m", "seed", "test_risk", "status"]
EXP2_COLUMNS = ["variant", "beta", "seed", "test_risk", "status"]
MINCOMPLEXITY_COLUMNS = ["phase", "m", "lr", "decay", "seed",
                         "train_risk", "test_risk", "frob_norm"]


class ConfigError(Exception):
    """Invalid or missing experiment configuration (CLI exit code 2)."""


@dataclass
class ExperimentConfig:
    suite: str
    out_dir: str = "results"
    seeds: tuple = (1, 2, 3)
    eval_every: int = 0                  # 0 -> trainer default
    instance: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}")
        if len(self.seeds) == 0:
            raise ConfigError("seeds list must be nonempty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        widths = self.grid.get("widths", [200])
        if len(widths) == 0:
            raise ConfigError("width grid must be nonempty")
        if any(int(m) < 1 for m in widths):
            raise ConfigError("widths must be positive")

    def train_config(self, **overrides) -> _rn.TrainConfig:
        kw = dict(self.train)
        kw.update(overrides)
        try:
            return _rn.TrainConfig(**kw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad [train] section: {e}") from e


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path!r}: {e}") from e
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML in {path!r}: {e}") from e
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "suite" not in raw:
        raise ConfigError("config must set 'suite'")
    raw.setdefault("seeds", [1, 2, 3])
    raw["seeds"] = tuple(int(s) for s in raw["seeds"])
    return ExperimentConfig(**raw)


# ---------------------------------------------------------------------------
# persistence

def _fmt(v) -> str:
    """CSV cell: shortest round-trip decimal for floats."""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: str, columns, rows) -> None:
    body = [",".join(columns)]
    body += [",".join(_fmt(c) for c in row) for row in rows]
    with open(path, "w") as fh:
        fh.write("\n".join(body) + "\n")


def check_csv_header(path: str, columns) -> None:
    """Reject schema drift: the header row must name `columns` exactly."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split(",")
    for col in columns:
        if col not in header:
            raise ConfigError(f"{path}: missing column {col!r}")
    for col in header:
        if col not in columns:
            raise ConfigError(f"{path}: unexpected column {col!r}")
    if header != list(columns):
        raise ConfigError(f"{path}: column order {header} != {list(columns)}")


MODEL_SELECTION_NOTE = ("best cell selected by test risk over the grid "
                        "(selection on test data; reported for transparency, "
                        "all cells are in the CSV)")


def _best_cell(rows, group_idx, risk_idx):
    """Per group, the row with the lowest finite risk; None if all diverged."""
    best = {}
    for row in rows:
        risk = row[risk_idx]
        if not np.isfinite(risk):
            continue
        g = row[group_idx]
        if g not in best or risk < best[g][risk_idx]:
            best[g] = row
    return {g: list(row) for g, row in sorted(best.items())}


def write_metadata(path: str, cfg: ExperimentConfig, extra: dict,
                   started: float) -> None:
    meta = {
        "risk_convention": RISK_CONVENTION,
        "suite": cfg.suite,
        "config": dataclasses.asdict(cfg),
        "started_unix": started,
        "wall_clock_s": time.time() - started,
    }
    meta.update(extra)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=1, default=str)


def _cell_rng(seed: int, cell: int) -> RngStream:
    return RngStream(seed).child(cell)


# ---------------------------------------------------------------------------
# exp1: the fixed hierarchical instance, algorithm tags vs width

EXP1_TAGS = ("3resnet(hidden)", "3resnet(all)", "3layer(hidden)", "3layer(all)",
             "2layer(hidden)", "2layer(all)", "last", "NTK")


def _exp1_data(cfg: ExperimentConfig, seed: int):
    H = pairwise_product_instance(alpha=float(cfg.instance.get("alpha", 0.3)))
    spec = pairwise_product_data_spec()
    n_train = int(cfg.data.get("n_train", 1000))
    n_test = int(cfg.data.get("n_test", 5000))
    rng = RngStream(seed)
    X = spec.sample(n_train, rng.child(10))
    Xt = spec.sample(n_test, rng.child(13))
    return (X, H(X)), (Xt, H(Xt))


def _risk(predict, data) -> float:
    X, Y = data
    return float(np.mean(np.sum((predict(X) - Y) ** 2, axis=1)))


def _run_tag(tag: str, m: int, seed: int, cell: int, cfg: ExperimentConfig,
             train_pair, test_pair, overrides: dict) -> float:
    d, k = train_pair[0].shape[1], train_pair[1].shape[1]
    rng = _cell_rng(seed, cell)
    overrides = dict(overrides)
    ridge = float(overrides.pop("ridge", 1e-8))
    tcfg = cfg.train_config(**overrides)
    if tag.startswith("3resnet"):
        trainable = "all" if "(all)" in tag else "hidden"
        model = _rn.init(d, k, m, rng.child(0), style="practice")
        _rn.sgd_train(model, train_pair,
                      dataclasses.replace(tcfg, trainable=trainable),
                      rng.child(1))
        return _risk(model, test_pair)
    if tag.startswith(("2layer", "3layer")):
        widths = [m] if tag.startswith("2layer") else [m, m]
        trainable = "all" if "(all)" in tag else "hidden"
        net = _bl.init_fc(d, k, widths, rng.child(0), trainable=trainable)
        _bl.train_fc(net, train_pair, tcfg, rng.child(1))
        return _risk(net, test_pair)
    if tag == "last":
        net = _bl.init_fc(d, k, [m, m], rng.child(0), trainable="last")
        fitted = _bl.conjugate_fit(net, *train_pair, ridge=ridge)
        return _risk(fitted, test_pair)
    if tag == "NTK":
        net = _bl.init_fc(d, k, [m, m], rng.child(0), trainable="all")
        lin = _bl.NTKLinearModel(net, trainable="all")
        _bl.train_ntk(lin, train_pair, tcfg, rng.child(1))
        return _risk(lin, test_pair)
    raise ConfigError(f"unknown algorithm tag {tag!r}")


def _algorithm_entries(cfg: ExperimentConfig):
    """Grid entries: plain tag strings or tables with per-tag overrides."""
    entries = cfg.grid.get("algorithms", list(EXP1_TAGS))
    out = []
    for e in entries:
        if isinstance(e, str):
            out.append((e, {}))
        else:
            e = dict(e)
            tag = e.pop("tag", None)
            if tag is None:
                raise ConfigError("algorithm table entries need a 'tag' key")
            out.append((tag, e))
    return out


def run_exp1(cfg: ExperimentConfig) -> list:
    """One CSV per algorithm tag: tag, m, seed, test_risk, status."""
    started = time.time()
    os.makedirs(cfg.out_dir, exist_ok=True)
    widths = [int(m) for m in cfg.grid.get("widths", [200])]
    alpha = float(cfg.instance.get("alpha", 0.3))
    paths = []
    all_rows = []
    for tag, overrides in _algorithm_entries(cfg):
        rows = []
        for ci, (m, seed) in enumerate(itertools.product(widths, cfg.seeds)):
            train_pair, test_pair = _exp1_data(cfg, seed)
            try:
                risk = _run_tag(tag, m, seed, ci, cfg, train_pair, test_pair,
                                overrides)
                rows.append((tag, m, seed, risk, "ok"))
            except (_rn.TrainingDivergedError, _bl.TrainingDivergedError):
                rows.append((tag, m, seed, float("inf"), "diverged"))
        rows.sort(key=lambda r: (r[0], r[1], r[2]))
        fname = "exp1_" + tag.replace("(", "_").replace(")", "") + ".csv"
        path = os.path.join(cfg.out_dir, fname)
        write_csv(path, EXP1_COLUMNS, rows)
        paths.append(path)
        all_rows += rows
    write_metadata(os.path.join(cfg.out_dir, "exp1_metadata.json"), cfg,
                   {"threshold_k_alpha_sq": 15 * alpha ** 2,
                    "best_cells": _best_cell(all_rows, 0, 3),
                    "model_selection": MODEL_SELECTION_NOTE}, started)
    return paths


# ---------------------------------------------------------------------------
# exp2: vary the base-signal strength beta

def run_exp2(cfg: ExperimentConfig) -> list:
    started = time.time()
    os.makedirs(cfg.out_dir, exist_ok=True)
    alpha = float(cfg.instance.get("alpha", 0.3))
    betas = [float(b) for b in cfg.grid.get("betas", [0.0, 0.5, 1.0])]
    if any(not 0.0 <= b <= 1.0 for b in betas):
        raise ConfigError("beta grid must lie in [0, 1]")
    m = int(cfg.grid.get("widths", [200])[0])
    spec = pairwise_product_data_spec()
    n_train = int(cfg.data.get("n_train", 1000))
    n_test = int(cfg.data.get("n_test", 5000))
    variants = cfg.grid.get("variants", ["hidden", "all"])
    rows = []
    for ci, (variant, beta, seed) in enumerate(
            itertools.product(variants, betas, cfg.seeds)):
        H = pairwise_product_instance(alpha=alpha, beta=beta)
        rng = RngStream(seed)
        X = spec.sample(n_train, rng.child(10))
        Xt = spec.sample(n_test, rng.child(13))
        train_pair, test_pair = (X, H(X)), (Xt, H(Xt))
        cell = _cell_rng(seed, ci)
        model = _rn.init(30, 15, m, cell.child(0), style="practice")
        try:
            _rn.sgd_train(model, train_pair,
                          cfg.train_config(trainable=variant), cell.child(1))
            rows.append((variant, beta, seed, _risk(model, test_pair), "ok"))
        except _rn.TrainingDivergedError:
            rows.append((variant, beta, seed, float("inf"), "diverged"))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    path = os.path.join(cfg.out_dir, "exp2.csv")
    write_csv(path, EXP2_COLUMNS, rows)
    write_metadata(os.path.join(cfg.out_dir, "exp2_metadata.json"), cfg,
                   {"alpha": alpha,
                    "best_cells": _best_cell(rows, 0, 3),
                    "model_selection": MODEL_SELECTION_NOTE}, started)
    return [path]


# ---------------------------------------------------------------------------
# mincomplexity: low-norm reference construction + random-init sweep

def _parity6_data(d: int, n: int, rng: RngStream):
    """x uniform on the +-1/sqrt(d) cube, y = d^3 x_1 ... x_6."""
    gen = rng.generator()
    X = (2.0 * gen.integers(0, 2, size=(n, d)) - 1.0) / np.sqrt(d)
    y = (d ** 3) * np.prod(X[:, :6], axis=1, keepdims=True)
    return X, y


def _fc_parity_net(m: int, d: int, W_hidden: np.ndarray) -> _bl.FullyConnectedNet:
    """Two-layer net with the fixed +-1/sqrt(m) output layer and no biases."""
    signs = np.ones(m)
    signs[m // 2:] = -1.0
    W2 = np.concatenate([signs / np.sqrt(m), [0.0]])[None, :]
    return _bl.FullyConnectedNet([W_hidden, W2], trainable="hidden")


def train_reference_parity(seed: int, m: int = 200, cap_scale: float = 10.5,
                           n_samples: int = 8000, epochs_fit: int = 250,
                           epochs_cap: int = 150, lr_fit: float = 0.1,
                           lr_cap: float = 0.05, decay: float = 1e-4):
    """Low-norm solution for y = 6^3 x_1...x_6 at d=6 by bias-free SGD.

    Fit phase, then rescale the hidden weights onto the Frobenius ball of
    radius cap_scale*sqrt(6) (exact under ReLU homogeneity) and fine-tune
    with per-step projection.  Returns (net, train_risk, frob_norm).
    """
    d = 6
    cap = cap_scale * np.sqrt(d)
    rng = RngStream(seed)
    gen0 = rng.child(0).generator()
    std = 1.0 / (np.sqrt(d) + np.sqrt(m))
    W1 = np.hstack([gen0.normal(0.0, std, size=(m, d)), np.zeros((m, 1))])
    net = _fc_parity_net(m, d, W1)
    X, Y = _parity6_data(d, n_samples, rng.child(1))
    Xall = cube_points(d, 1.0 / np.sqrt(d))
    yall = (d ** 3) * np.prod(Xall, axis=1, keepdims=True)
    W = net.weights[0]
    mom = np.zeros_like(W)
    order = rng.child(2).generator()
    batch, momentum = 50, 0.9

    def sweep(epochs, lr, wd, ball=None):
        for ep in range(epochs):
            perm = order.permutation(n_samples)
            lr_e = lr if ep < epochs - 30 else lr / 5.0
            for lo in range(0, n_samples, batch):
                b = perm[lo: lo + batch]
                g = net.gradient(X[b], Y[b])[0][0] + wd * W
                g[:, d] = 0.0                     # bias stays zero
                mom[:] = momentum * mom + g
                W[:] = W - lr_e * mom
                if ball is not None:
                    norm = np.linalg.norm(W)
                    if norm > ball:
                        W[:] = W * (ball / norm)

    sweep(epochs_fit, lr_fit, decay)
    scale = min(1.0, 0.998 * cap / np.linalg.norm(W))
    W[:] = scale * W
    mom[:] = 0.0
    sweep(epochs_cap, lr_cap, 0.0, ball=0.998 * cap)
    risk = _rn.empirical_risk(net, Xall, yall)
    return net, float(risk), float(np.linalg.norm(W))


def pad_parity_net(net: _bl.FullyConnectedNet, d: int) -> _bl.FullyConnectedNet:
    """Lift a d=6 reference net to dimension d: insert d-6 zero input columns
    and rescale by sqrt(d/6) (inputs shrink from +-1/sqrt(6) to +-1/sqrt(d))."""
    if d < 6:
        raise ValueError("need d >= 6")
    W = net.weights[0]
    m = W.shape[0]
    scale = np.sqrt(d / 6.0)
    Wp = np.hstack([scale * W[:, :6], np.zeros((m, d - 6)),
                    W[:, 6:]])        # bias column multiplies 1, not x
    return _fc_parity_net(m, d, Wp)


def duplicate_rows(net: _bl.FullyConnectedNet, times: int) -> _bl.FullyConnectedNet:
    """Width m -> times*m by duplicating rows with a 1/sqrt(times) rescale;
    preserves outputs and the Frobenius norm exactly."""
    if times < 1:
        raise ValueError("times must be >= 1")
    W = net.weights[0]
    m, cols = W.shape
    half = m // 2
    pos = np.repeat(W[:half], times, axis=0) / np.sqrt(times)
    neg = np.repeat(W[half:], times, axis=0) / np.sqrt(times)
    return _fc_parity_net(times * m, cols - 1, np.vstack([pos, neg]))


def run_mincomplexity(cfg: ExperimentConfig) -> list:
    started = time.time()
    os.makedirs(cfg.out_dir, exist_ok=True)
    d = int(cfg.instance.get("d", 40))
    if d < 6:
        raise ConfigError("mincomplexity needs d >= 6")
    n_test = int(cfg.data.get("n_test", 4096))
    rows = []
    # phase (i): reference construction at d=6, m=200, then pad / duplicate
    ref_m = int(cfg.instance.get("ref_m", 200))
    ref_kw = {k[4:]: cfg.instance[k] for k in
              ("ref_epochs_fit", "ref_epochs_cap", "ref_n_samples")
              if k in cfg.instance}
    for seed in cfg.seeds:
        net, risk, frob = train_reference_parity(seed, m=ref_m, **ref_kw)
        rows.append(("reference", ref_m, 0.1, 1e-4, seed, risk, risk, frob))
        lifted = pad_parity_net(net, d)
        for times in [int(t) for t in cfg.grid.get("duplications", [1])]:
            wide = duplicate_rows(lifted, times)
            Xt, yt = _parity6_data(d, n_test, RngStream(seed).child(90))
            t_risk = _rn.empirical_risk(wide, Xt, yt)
            frob_w = float(np.linalg.norm(wide.weights[0]))
            rows.append(("reference-padded", times * ref_m, 0.1, 1e-4, seed,
                         float("nan"), float(t_risk), frob_w))
    # phase (ii): SGD from random init over the lr/decay/width grid at full d
    widths = [int(m) for m in cfg.grid.get("widths", [200])]
    lrs = [float(v) for v in cfg.grid.get("lrs", [0.1])]
    decays = [float(v) for v in cfg.grid.get("decays", [0.0])]
    n_train = int(cfg.data.get("n_train", 5000))
    epochs = int(cfg.train.get("T", 400))
    for ci, (m, lr, decay, seed) in enumerate(
            itertools.product(widths, lrs, decays, cfg.seeds)):
        rng = _cell_rng(seed, ci)
        gen = rng.child(0).generator()
        std = 1.0 / (np.sqrt(d) + np.sqrt(m))
        W1 = np.hstack([gen.normal(0.0, std, size=(m, d)), np.zeros((m, 1))])
        net = _fc_parity_net(m, d, W1)
        X, Y = _parity6_data(d, n_train, rng.child(1))
        Xt, yt = _parity6_data(d, n_test, rng.child(2))
        tcfg = cfg.train_config(eta_w=lr, eta_v=lr, weight_decay=decay, T=epochs)
        try:
            _bl.train_fc(net, (X, Y), tcfg, rng.child(3))
            train_risk = _rn.empirical_risk(net, X, Y)
            test_risk = _rn.empirical_risk(net, Xt, yt)
            frob = float(np.linalg.norm(net.weights[0]))
            rows.append(("sgd", m, lr, decay, seed,
                         float(train_risk), float(test_risk), frob))
        except _bl.TrainingDivergedError:
            rows.append(("sgd", m, lr, decay, seed,
                         float("inf"), float("inf"), float("nan")))
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3], r[4]))
    path = os.path.join(cfg.out_dir, "mincomplexity.csv")
    write_csv(path, MINCOMPLEXITY_COLUMNS, rows)
    write_metadata(os.path.join(cfg.out_dir, "mincomplexity_metadata.json"),
                   cfg, {"frob_cap": 10.5 * np.sqrt(6.0),
                         "best_cells": _best_cell(rows, 0, 6),
                         "model_selection": MODEL_SELECTION_NOTE}, started)
    return [path]


# ---------------------------------------------------------------------------
# separation: kernel census + resnet comparison on the same instance

def run_separation(cfg: ExperimentConfig) -> list:
    started = time.time()
    os.makedirs(cfg.out_dir, exist_ok=True)
    inst = cfg.instance
    d = int(inst.get("d", 12))
    d1 = int(inst.get("d1", d))
    k = int(inst.get("k", 2))
    alpha = float(inst.get("alpha", 0.3))
    N = int(cfg.data.get("n_train", 20))
    ridge = float(inst.get("ridge", 1e-8))
    kspec = _bl.KernelSpec(kind=inst.get("kernel", "gaussian"),
                           h=float(inst.get("h", 1.0)))
    seed0 = cfg.seeds[0]
    report = _lb.kernel_separation_experiment(
        d, d1, k, alpha, N, kspec, ridge, RngStream(seed0).child(0))
    report_path = os.path.join(cfg.out_dir, "separation_report.json")
    report.save(report_path)
    risks_path = os.path.join(cfg.out_dir, "separation_risks.csv")
    report.risks_to_csv(risks_path)

    # resnet on one fixed subset of the same instance, exact-enumeration risk
    subset = tuple(int(j) for j in inst.get("subset", list(range(k))))
    H = parity_instance(d, d1, k, alpha, subset)
    spec = DataSpec(d, d1, scaling="sphere")
    Xall = cube_points(d, spec.coordinate_scale)
    Yall = H(Xall)
    n_resnet = int(cfg.data.get("n_resnet", 2000))
    m = int(cfg.grid.get("widths", [200])[0])
    rows = []
    for ci, seed in enumerate(cfg.seeds):
        rng = _cell_rng(seed, ci)
        X = spec.sample(n_resnet, rng.child(10))
        Y = H(X)
        model = _rn.init(d, k, m, rng.child(11), style="practice")
        tcfg = cfg.train_config()
        try:
            _rn.sgd_train(model, (X, Y), tcfg, rng.child(12))
            risk = _risk(model, (Xall, Yall))
            rows.append((seed, risk, "ok"))
        except _rn.TrainingDivergedError:
            rows.append((seed, float("inf"), "diverged"))
    resnet_path = os.path.join(cfg.out_dir, "separation_resnet.csv")
    write_csv(resnet_path, ["seed", "exact_risk", "status"], rows)
    write_metadata(os.path.join(cfg.out_dir, "separation_metadata.json"), cfg,
                   {"threshold": report.threshold,
                    "fraction_below": report.fraction_below}, started)
    return [report_path, risks_path, resnet_path]


# ---------------------------------------------------------------------------
# hermite verification + gradient check (used by the CLI directly)

def hermite_verify_suite(eps: float = 0.05, mc: int = 10 ** 6,
                         grid=None, seed: int = 0):
    """Fit phi(z) = z and MC-verify the indicator identity on a grid of x1.

    Returns a list of (x1, estimate, target, stderr, ok)."""
    from .concept import SmoothActivation, TaylorSeries
    phi = SmoothActivation(TaylorSeries((0.0, 1.0), 1.0))
    fit = _hm.fit_indicator_function(phi, eps)
    if grid is None:
        grid = np.linspace(-1.0, 1.0, 9)
    rows = []
    for i, x1 in enumerate(grid):
        est, target, se = _hm.verify_fit(fit, float(x1), mc,
                                         RngStream(seed).child(i))
        ok = abs(est - target) <= eps + 4.0 * se
        rows.append((float(x1), est, target, se, bool(ok)))
    return rows


def gradcheck_suite(n_models: int = 50, h: float = 1e-5, seed: int = 0,
                    check_fraction: float = 1.0) -> float:
    """Central finite differences vs analytic gradients on random models.

    Checks every coordinate of W, V and A (or a random fraction of them);
    returns the max relative error with denominator max(|a|, |n|, 1e-3)
    to absorb roundoff on near-zero coordinates.
    """
    worst = 0.0
    for t in range(n_models):
        rng = RngStream(seed).child(t)
        gen = rng.generator()
        d = int(gen.integers(2, 17))
        k = int(gen.integers(1, 5))
        m = int(gen.integers(4, 65))
        model = _rn.init(d, k, m, rng.child(0), style="practice")
        # move off the dead-ReLU measure-zero set deterministically
        model.W = 0.1 * gen.standard_normal(model.W.shape)
        model.V = 0.1 * gen.standard_normal(model.V.shape)
        X = gen.standard_normal((2, d))
        Y = gen.standard_normal((2, k))
        grads = _rn.gradient(model, X, Y, with_A=True)
        for pname, g in zip(("W", "V", "A"), grads):
            P = getattr(model, pname)
            if check_fraction >= 1.0:
                flat = np.arange(P.size)
            else:
                n_check = max(1, int(check_fraction * P.size))
                flat = gen.choice(P.size, size=min(n_check, P.size), replace=False)
            for j in flat:
                idx = np.unravel_index(j, P.shape)
                orig = P[idx]
                P[idx] = orig + h
                up = _rn.empirical_risk(model, X, Y) / 2.0
                P[idx] = orig - h
                down = _rn.empirical_risk(model, X, Y) / 2.0
                P[idx] = orig
                num = (up - down) / (2.0 * h)
                a = g[idx]
                rel = abs(a - num) / max(abs(a), abs(num), 1e-3)
                worst = max(worst, rel)
    return worst


RUNNERS = {"exp1": run_exp1, "exp2": run_exp2,
           "mincomplexity": run_mincomplexity, "separation": run_separation}


def run_suite(cfg: ExperimentConfig) -> list:
    if cfg.suite == "hermite-verify":
        started = time.time()
        os.makedirs(cfg.out_dir, exist_ok=True)
        rows = hermite_verify_suite(
            eps=float(cfg.instance.get("eps", 0.05)),
            mc=int(cfg.instance.get("mc", 10 ** 6)),
            seed=cfg.seeds[0])
        path = os.path.join(cfg.out_dir, "hermite_verify.csv")
        write_csv(path, ["x1", "estimate", "target", "stderr", "ok"], rows)
        write_metadata(os.path.join(cfg.out_dir, "hermite_metadata.json"),
                       cfg, {}, started)
        return [path]
    return RUNNERS[cfg.suite](cfg)
