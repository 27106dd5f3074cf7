"""Figure rendering over the experiment harness's CSV outputs.

Read-only over the inputs: each kind has a fixed column schema, a loader
that rejects anything else, and a renderer that returns a matplotlib
Figure.  Aggregation is mean with a +-1 std band over seeds; width axes
are log-scale since the sweeps are geometric.
"""

import csv
import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

SCHEMAS = {
    "exp1": ["tag", "m", "seed", "test_risk", "status"],
    "exp2": ["variant", "beta", "seed", "test_risk", "status"],
    "mincomplexity": ["phase", "m", "lr", "decay", "seed",
                      "train_risk", "test_risk", "frob_norm"],
    "separation": ["subset", "risk"],
}

DEFAULT_THRESHOLDS = {"exp1": 1.35, "separation": 0.3 ** 2 / 16.0}

# one color per algorithm tag, stable across figures
TAG_COLORS = {
    "3resnet(hidden)": "tab:blue",
    "3resnet(all)": "tab:cyan",
    "3layer(hidden)": "tab:green",
    "3layer(all)": "tab:olive",
    "2layer(hidden)": "tab:purple",
    "2layer(all)": "tab:pink",
    "last": "tab:orange",
    "NTK": "tab:red",
}


class SchemaError(Exception):
    """CSV does not match the expected schema; str(e) names the column."""


def load_rows(paths, kind):
    if kind not in SCHEMAS:
        raise SchemaError(f"unknown figure kind {kind!r}")
    expected = SCHEMAS[kind]
    rows = []
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise SchemaError(f"{path}: empty file, expected "
                                  f"columns {expected}")
            for col in expected:
                if col not in header:
                    raise SchemaError(f"{path}: missing column {col!r}")
            for col in header:
                if col not in expected:
                    raise SchemaError(f"{path}: unexpected column {col!r}")
            if header != expected:
                raise SchemaError(f"{path}: column order {header} != "
                                  f"{expected}, first offender "
                                  f"{next(c for c, e in zip(header, expected) if c != e)!r}")
            for line in reader:
                if len(line) != len(expected):
                    raise SchemaError(f"{path}: row width {len(line)} != "
                                      f"{len(expected)} columns")
                rows.append(dict(zip(expected, line)))
    return rows


def _series(rows, key_cols, value_col):
    """Group rows by key_cols; mean and std of value_col over the group."""
    groups = {}
    for r in rows:
        if r.get("status", "ok") != "ok":
            continue
        key = tuple(r[c] for c in key_cols)
        groups.setdefault(key, []).append(float(r[value_col]))
    return {k: (float(np.mean(v)), float(np.std(v)))
            for k, v in groups.items()}


def _band(ax, xs, stats, label, color=None):
    mean = np.array([stats[x][0] for x in xs])
    std = np.array([stats[x][1] for x in xs])
    xv = np.array([float(x) for x in xs])
    ax.plot(xv, mean, marker="o", label=label, color=color)
    ax.fill_between(xv, mean - std, mean + std, alpha=0.2, color=color)


def _render_exp1(rows, threshold):
    fig, ax = plt.subplots(figsize=(7, 5))
    stats = _series(rows, ("tag", "m"), "test_risk")
    for tag in sorted({k[0] for k in stats}):
        widths = sorted({k[1] for k in stats if k[0] == tag}, key=float)
        _band(ax, widths, {w: stats[(tag, w)] for w in widths}, tag,
              TAG_COLORS.get(tag))
    ax.set_xscale("log")
    ax.set_xlabel("width m")
    ax.set_ylabel("test risk")
    if threshold is not None:
        ax.axhline(threshold, color="black", linestyle="--",
                   label=f"threshold {threshold}")
    if stats or threshold is not None:
        ax.legend()
    return fig


def _render_exp2(rows, threshold):
    fig, ax = plt.subplots(figsize=(7, 5))
    stats = _series(rows, ("variant", "beta"), "test_risk")
    for variant in sorted({k[0] for k in stats}):
        betas = sorted({k[1] for k in stats if k[0] == variant}, key=float)
        _band(ax, betas, {b: stats[(variant, b)] for b in betas}, variant)
    ax.set_xlabel("base-signal strength beta")
    ax.set_ylabel("test risk")
    if threshold is not None:
        ax.axhline(threshold, color="black", linestyle="--")
    if stats:
        ax.legend()
    return fig


def _render_mincomplexity(rows, threshold):
    fig, ax = plt.subplots(figsize=(7, 5))
    ax2 = ax.twinx()
    risk = _series(rows, ("phase", "m"), "test_risk")
    frob = _series(rows, ("phase", "m"), "frob_norm")
    for phase in sorted({k[0] for k in risk}):
        widths = sorted({k[1] for k in risk if k[0] == phase}, key=float)
        widths = [w for w in widths
                  if not math.isnan(risk[(phase, w)][0])]
        if widths:
            _band(ax, widths, {w: risk[(phase, w)] for w in widths},
                  f"{phase} risk")
        fwidths = sorted({k[1] for k in frob if k[0] == phase}, key=float)
        fwidths = [w for w in fwidths if not math.isnan(frob[(phase, w)][0])]
        mean = [frob[(phase, w)][0] for w in fwidths]
        if fwidths:
            ax2.plot([float(w) for w in fwidths], mean, marker="s",
                     linestyle=":", label=f"{phase} ||W||_F")
    ax.set_xscale("log")
    ax.set_xlabel("width m")
    ax.set_ylabel("test risk")
    ax2.set_ylabel("Frobenius norm")
    if threshold is not None:
        ax.axhline(threshold, color="black", linestyle="--")
    h1, l1 = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    if h1 or h2:
        ax.legend(h1 + h2, l1 + l2)
    return fig


def _render_separation(rows, threshold):
    fig, ax = plt.subplots(figsize=(7, 5))
    risks = [float(r["risk"]) for r in rows]
    if risks:
        ax.hist(risks, bins=20, color="tab:blue", alpha=0.8)
    ax.set_xlabel("exact risk per subset")
    ax.set_ylabel("count")
    if threshold is not None:
        ax.axvline(threshold, color="black", linestyle="--",
                   label=f"floor {threshold}")
        ax.legend()
    return fig


_RENDERERS = {"exp1": _render_exp1, "exp2": _render_exp2,
              "mincomplexity": _render_mincomplexity,
              "separation": _render_separation}


def render(kind, rows, threshold=None):
    """Build the figure for `kind` from already-validated rows.

    threshold=None picks the kind's default overlay (exp1 and separation
    have one; the others draw a line only when a value is passed)."""
    if kind not in _RENDERERS:
        raise SchemaError(f"unknown figure kind {kind!r}")
    if threshold is None:
        threshold = DEFAULT_THRESHOLDS.get(kind)
    return _RENDERERS[kind](rows, threshold)
