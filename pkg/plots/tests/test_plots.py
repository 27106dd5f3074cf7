import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from hierlearn_plots import SCHEMAS, SchemaError, load_rows, render
from hierlearn_plots.cli import main

SAMPLES = os.path.join(os.path.dirname(__file__), "..", "samples")

SAMPLE_FILES = {
    "exp1": ["exp1_3resnet_hidden.csv", "exp1_2layer_all.csv",
             "exp1_last.csv", "exp1_NTK.csv"],
    "exp2": ["exp2.csv"],
    "mincomplexity": ["mincomplexity.csv"],
    "separation": ["separation_risks.csv"],
}


def _sample_paths(kind):
    return [os.path.join(SAMPLES, f) for f in SAMPLE_FILES[kind]]


@pytest.mark.parametrize("kind", sorted(SCHEMAS))
def test_render_all_sample_kinds(kind, tmp_path):
    out = tmp_path / f"{kind}.png"
    rc = main([kind, "--csv", *_sample_paths(kind), "--out", str(out)])
    assert rc == 0
    assert out.stat().st_size > 0


def test_exp1_has_exactly_one_threshold_line_at_135():
    rows = load_rows(_sample_paths("exp1"), "exp1")
    fig = render("exp1", rows)
    ax = fig.axes[0]
    threshold_lines = [ln for ln in ax.get_lines()
                       if len(set(ln.get_ydata())) == 1
                       and float(ln.get_ydata()[0]) == 1.35]
    assert len(threshold_lines) == 1


def test_threshold_flag_overrides_default(tmp_path):
    rows = load_rows(_sample_paths("exp1"), "exp1")
    fig = render("exp1", rows, threshold=2.0)
    ax = fig.axes[0]

    def lines_at(y):
        return [ln for ln in ax.get_lines()
                if len(set(ln.get_ydata())) == 1
                and float(ln.get_ydata()[0]) == y]

    assert len(lines_at(2.0)) == 1
    assert len(lines_at(1.35)) == 0


def test_svg_output_is_valid_xml(tmp_path):
    out = tmp_path / "fig.svg"
    rc = main(["separation", "--csv", *_sample_paths("separation"),
               "--out", str(out), "--format", "svg"])
    assert rc == 0
    root = ET.parse(out).getroot()
    assert root.tag.endswith("svg")


def test_empty_but_headered_csv_renders_axes_only(tmp_path):
    src = tmp_path / "empty.csv"
    src.write_text("variant,beta,seed,test_risk,status\n")
    out = tmp_path / "empty.png"
    rc = main(["exp2", "--csv", str(src), "--out", str(out)])
    assert rc == 0
    assert out.exists()


def test_schema_mismatch_names_offending_column(tmp_path, capsys):
    src = tmp_path / "bad.csv"
    src.write_text("tag,m,seed,test_risk\n")          # status missing
    rc = main(["exp1", "--csv", str(src), "--out", str(tmp_path / "x.png")])
    assert rc != 0
    assert "'status'" in capsys.readouterr().err


def test_unexpected_column_rejected(tmp_path, capsys):
    src = tmp_path / "bad.csv"
    src.write_text("subset,risk,extra\n0-1,0.1,9\n")
    rc = main(["separation", "--csv", str(src),
               "--out", str(tmp_path / "x.png")])
    assert rc != 0
    assert "'extra'" in capsys.readouterr().err


def test_load_rows_rejects_ragged_row(tmp_path):
    src = tmp_path / "ragged.csv"
    src.write_text("subset,risk\n0-1\n")
    with pytest.raises(SchemaError):
        load_rows([str(src)], "separation")


def test_load_rows_rejects_unknown_kind(tmp_path):
    with pytest.raises(SchemaError):
        load_rows([], "nope")


def test_missing_file_exits_nonzero(tmp_path):
    rc = main(["exp1", "--csv", str(tmp_path / "no.csv"),
               "--out", str(tmp_path / "x.png")])
    assert rc == 2


def test_mean_std_aggregation_over_seeds(tmp_path):
    src = tmp_path / "two_seeds.csv"
    src.write_text("tag,m,seed,test_risk,status\n"
                   "last,100,1,2.0,ok\n"
                   "last,100,2,4.0,ok\n"
                   "last,100,3,9.9,diverged\n")
    rows = load_rows([str(src)], "exp1")
    fig = render("exp1", rows, threshold=None)
    ys = np.concatenate([ln.get_ydata() for ln in fig.axes[0].get_lines()])
    # the diverged row is dropped: the single point is the mean of 2 and 4
    assert 3.0 in ys
    assert 9.9 not in ys
