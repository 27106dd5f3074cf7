import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hierlearn.core import RngStream
from hierlearn import cli, harness
from hierlearn.harness import ConfigError, ExperimentConfig


def _write(path, text):
    path.write_text(text)
    return str(path)


TINY_EXP1 = """
suite = "exp1"
seeds = [1]

[grid]
widths = [16]
algorithms = ["3resnet(hidden)"]

[train]
eta_w = 0.1
eta_v = 0.1
T = 2
lr_drop_epoch = 0

[data]
n_train = 60
n_test = 80
"""


def test_load_config_roundtrip(tmp_path):
    cfg = harness.load_config(_write(tmp_path / "c.toml", TINY_EXP1))
    assert cfg.suite == "exp1"
    assert cfg.seeds == (1,)
    assert cfg.train["T"] == 2


def test_load_config_rejects_missing_file():
    with pytest.raises(ConfigError):
        harness.load_config("/nonexistent/config.toml")


def test_load_config_rejects_bad_toml(tmp_path):
    with pytest.raises(ConfigError):
        harness.load_config(_write(tmp_path / "b.toml", "suite = ["))


def test_load_config_rejects_unknown_keys(tmp_path):
    with pytest.raises(ConfigError):
        harness.load_config(_write(tmp_path / "u.toml",
                                   'suite = "exp1"\nbogus = 1\n'))


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(suite="nope")
    with pytest.raises(ConfigError):
        ExperimentConfig(suite="exp1", seeds=(1, 1))
    with pytest.raises(ConfigError):
        ExperimentConfig(suite="exp1", grid={"widths": []})
    with pytest.raises(ConfigError):
        ExperimentConfig(suite="exp1", train={"eta_w": -1.0}).train_config()


@settings(deadline=None, max_examples=50)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_csv_float_format_round_trips(x):
    assert float(harness._fmt(x)) == x


def test_write_csv_shortest_repr(tmp_path):
    path = tmp_path / "t.csv"
    harness.write_csv(str(path), ["a", "b"], [(0.1, 1), (1 / 3, 2)])
    lines = path.read_text().splitlines()
    assert lines == ["a,b", "0.1,1", f"{1/3!r},2"]


def test_reference_padding_preserves_outputs_exactly():
    net, risk, frob = harness.train_reference_parity(
        1, n_samples=500, epochs_fit=3, epochs_cap=2)
    d = 17
    lifted = harness.pad_parity_net(net, d)
    X6 = harness.cube_points(6, 1.0 / np.sqrt(6))
    Xd = np.zeros((64, d))
    Xd[:, :6] = X6 * (np.sqrt(6) / np.sqrt(d))
    assert np.max(np.abs(lifted(Xd) - net(X6))) <= 1e-12
    # frobenius grows exactly by sqrt(d/6) (zero bias column)
    assert np.linalg.norm(lifted.weights[0]) == pytest.approx(
        np.sqrt(d / 6) * frob, rel=1e-12)


def test_row_duplication_preserves_outputs_and_norm():
    net, _, frob = harness.train_reference_parity(
        2, n_samples=500, epochs_fit=3, epochs_cap=2)
    wide = harness.duplicate_rows(net, 3)
    X6 = harness.cube_points(6, 1.0 / np.sqrt(6))
    assert np.max(np.abs(wide(X6) - net(X6))) <= 1e-12
    assert np.linalg.norm(wide.weights[0]) == pytest.approx(frob, rel=1e-12)
    assert wide.weights[0].shape[0] == 600


def test_gradcheck_suite_small():
    assert harness.gradcheck_suite(n_models=3, check_fraction=0.1) <= 1e-5


def test_run_exp1_outputs_and_determinism(tmp_path):
    cfg = harness.load_config(_write(tmp_path / "c.toml", TINY_EXP1))
    cfg.out_dir = str(tmp_path / "run1")
    paths = harness.run_exp1(cfg)
    body1 = open(paths[0]).read()
    assert body1.splitlines()[0] == "tag,m,seed,test_risk,status"
    cfg.out_dir = str(tmp_path / "run2")
    body2 = open(harness.run_exp1(cfg)[0]).read()
    assert body1 == body2
    meta = json.load(open(tmp_path / "run1" / "exp1_metadata.json"))
    assert "no 1/2" in meta["risk_convention"]
    assert meta["threshold_k_alpha_sq"] == pytest.approx(1.35)


def test_run_exp1_records_divergence_and_continues(tmp_path):
    text = TINY_EXP1.replace("eta_w = 0.1", "eta_w = 1e8").replace(
        "eta_v = 0.1", "eta_v = 1e8")
    cfg = harness.load_config(_write(tmp_path / "d.toml", text))
    cfg.out_dir = str(tmp_path / "out")
    with np.errstate(all="ignore"):
        paths = harness.run_exp1(cfg)
    rows = list(csv.DictReader(open(paths[0])))
    assert rows[0]["status"] == "diverged"
    assert rows[0]["test_risk"] == "inf"


def test_check_csv_header_accepts_and_rejects(tmp_path):
    good = tmp_path / "good.csv"
    good.write_text("tag,m,seed,test_risk,status\n")
    harness.check_csv_header(str(good), harness.EXP1_COLUMNS)
    for header in ("tag,m,seed,test_risk",              # missing
                   "tag,m,seed,test_risk,status,extra",  # drift
                   "m,tag,seed,test_risk,status"):       # reordered
        bad = tmp_path / "bad.csv"
        bad.write_text(header + "\n")
        with pytest.raises(ConfigError):
            harness.check_csv_header(str(bad), harness.EXP1_COLUMNS)


def test_metadata_best_cell_summary(tmp_path):
    cfg = harness.load_config(_write(tmp_path / "c.toml", TINY_EXP1))
    cfg.out_dir = str(tmp_path / "run")
    cfg.seeds = (1, 2)
    harness.run_exp1(cfg)
    meta = json.load(open(tmp_path / "run" / "exp1_metadata.json"))
    best = meta["best_cells"]["3resnet(hidden)"]
    risks = [float(r["test_risk"]) for r in
             csv.DictReader(open(tmp_path / "run" / "exp1_3resnet_hidden.csv"))]
    assert float(best[3]) == min(risks)
    assert "test data" in meta["model_selection"]


def test_best_cell_skips_nonfinite_rows():
    rows = [("a", 1, 1, float("inf")), ("a", 2, 1, 0.5), ("b", 1, 1, float("nan"))]
    best = harness._best_cell(rows, 0, 3)
    assert best == {"a": ["a", 2, 1, 0.5]}


def test_cell_rngs_are_distinct():
    a = harness._cell_rng(1, 0).generator().standard_normal(4)
    b = harness._cell_rng(1, 1).generator().standard_normal(4)
    c = harness._cell_rng(2, 0).generator().standard_normal(4)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)


def test_hermite_verify_suite_grid():
    rows = harness.hermite_verify_suite(eps=0.1, mc=20000,
                                        grid=[-0.5, 0.0, 0.5])
    assert len(rows) == 3
    assert all(ok for *_, ok in rows)


# ---------------------------------------------------------------------------
# CLI

def test_cli_dry_run_writes_nothing(tmp_path):
    cfg_path = _write(tmp_path / "c.toml", TINY_EXP1)
    out = tmp_path / "never"
    rc = cli.main(["run-exp1", "--config", cfg_path, "--out", str(out),
                   "--dry-run"])
    assert rc == 0
    assert not out.exists()


def test_cli_missing_config_exits_2():
    assert cli.main(["run-exp1", "--config", "/nope.toml"]) == 2


def test_cli_wrong_suite_exits_2(tmp_path):
    cfg_path = _write(tmp_path / "c.toml", TINY_EXP1)
    assert cli.main(["run-exp2", "--config", cfg_path]) == 2


def test_cli_unknown_command_exits_2(capsys):
    assert cli.main(["bogus"]) == 2
    assert cli.main([]) == 2


def test_cli_bad_seeds_exits_2(tmp_path):
    cfg_path = _write(tmp_path / "c.toml", TINY_EXP1)
    assert cli.main(["run-exp1", "--config", cfg_path, "--seeds", "x,y"]) == 2


def test_cli_runs_tiny_exp1(tmp_path):
    cfg_path = _write(tmp_path / "c.toml", TINY_EXP1)
    out = tmp_path / "out"
    assert cli.main(["run-exp1", "--config", cfg_path, "--out", str(out)]) == 0
    assert (out / "exp1_3resnet_hidden.csv").exists()


def test_cli_fourier_matches_naive(tmp_path):
    from hierlearn.lowerbound import CubeFunction, walsh_hadamard_naive
    gen = RngStream(4).generator()
    vals = gen.standard_normal(16)
    src = tmp_path / "vals.csv"
    with open(src, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["value"])
        for v in vals:
            w.writerow([repr(float(v))])
    dst = tmp_path / "coeffs.csv"
    assert cli.main(["fourier", "--csv", str(src), "--out", str(dst)]) == 0
    rows = list(csv.DictReader(open(dst)))
    got = np.array([float(r["coefficient"]) for r in rows])
    expect = walsh_hadamard_naive(CubeFunction(4, vals))
    assert np.allclose(got, expect, atol=1e-12)


def test_cli_fourier_rejects_bad_length(tmp_path):
    src = tmp_path / "vals.csv"
    src.write_text("value\n1.0\n2.0\n3.0\n")
    assert cli.main(["fourier", "--csv", str(src), "--out",
                     str(tmp_path / "o.csv")]) == 2
