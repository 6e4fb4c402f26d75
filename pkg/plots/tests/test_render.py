"""Figure rendering tests, driven by handcrafted harness-format CSVs."""

import sys

import pytest
from matplotlib.patches import PathPatch, Rectangle

import matplotlib.pyplot as plt

from plots import PlotSpec, read_rows, render, rmse_cells
from plots.cli import main
from plots.render import _length_bars, _rmse_boxplot

RMSE_CSV = (
    "# rmse per (instance, method, query): sqrt((...)/2)\n"
    "model_index,method,query,rmse\n"
    "0,mm-o,pns:X:Y1,0.0125\n"
    "0,mm-o,pns:X:Y2,0.0515\n"
    "0,ms-o,pns:X:Y1,0.0030\n"
    "0,ms-o,pns:X:Y2,0.0480\n"
    "0,ms-o,pns:Y1:Y2,0.1950\n"
    "1,mm-o,pns:X:Y1,0.0000\n"
    "1,mm-o,pns:X:Y2,0.0721\n"
    "1,ms-o,pns:X:Y1,0.0101\n"
    "1,ms-o,pns:X:Y2,0.0333\n"
    "1,ms-o,pns:Y1:Y2,0.0942\n"
)

LENGTHS_CSV = (
    "regime,query,n,mean_length\n"
    "s-o,pns:X:Y1,4,0.21\n"
    "s-o,pns:Y1:Y2,4,0.52\n"
    "s-oe,pns:X:Y1,4,0.17\n"
    "s-oe,pns:Y1:Y2,4,0.19\n"
    "mm-o,pns:X:Y1,4,0.32\n"
    "mm-o,pns:Y1:Y2,0,\n"
)

CONTAINMENT_CSV = (
    "regime_a,regime_b,query,n,pct_equal,pct_a_in_b,pct_b_in_a,pct_none\n"
    "s-oe,s-o,pns:X:Y1,500,12.0,88.0,0.0,0.0\n"
    "s-o,mm-o,pns:X:Y2,500,3.4,96.6,0.0,0.0\n"
    "s-o,ms-o,pns:Y1:Y2,500,0.0,71.2,10.4,18.4\n"
    "s-o,mm-o,pns:Y1:Y2,0,,,,\n"
)


@pytest.fixture
def rmse_csv(tmp_path):
    path = tmp_path / "summary_rmse.csv"
    path.write_text(RMSE_CSV)
    return path


@pytest.fixture
def lengths_csv(tmp_path):
    path = tmp_path / "summary_lengths.csv"
    path.write_text(LENGTHS_CSV)
    return path


@pytest.fixture
def containment_csv(tmp_path):
    path = tmp_path / "summary_containment.csv"
    path.write_text(CONTAINMENT_CSV)
    return path


# ---------- reading ----------


def test_comment_line_is_skipped(rmse_csv):
    rows = read_rows(rmse_csv, "rmse_boxplot")
    assert len(rows) == 10
    assert rows[0]["method"] == "mm-o"


def test_missing_column_is_an_error(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("model_index,method,query\n0,mm-o,pns:X:Y1\n")
    with pytest.raises(ValueError, match="missing columns.*rmse"):
        read_rows(path, "rmse_boxplot")


def test_empty_input_is_an_error(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("# comment\nmodel_index,method,query,rmse\n")
    with pytest.raises(ValueError, match="no data rows"):
        read_rows(path, "rmse_boxplot")


def test_unknown_kind_is_rejected(rmse_csv, tmp_path):
    with pytest.raises(ValueError, match="unknown figure kind"):
        PlotSpec(str(rmse_csv), "pie", str(tmp_path / "x.svg"))


def test_format_comes_from_the_extension_unless_overridden(rmse_csv):
    assert PlotSpec(str(rmse_csv), "rmse_boxplot", "a.svg").format == "svg"
    assert PlotSpec(str(rmse_csv), "rmse_boxplot", "a.png").format == "png"
    assert (
        PlotSpec(str(rmse_csv), "rmse_boxplot", "a.img", image_format="svg").format
        == "svg"
    )
    with pytest.raises(ValueError, match="unsupported image format"):
        PlotSpec(str(rmse_csv), "rmse_boxplot", "a.pdf").format


# ---------- rmse boxplot ----------


def test_not_computable_cell_is_absent(rmse_csv):
    rows = read_rows(rmse_csv, "rmse_boxplot")
    cells = rmse_cells(rows)
    assert ("mm-o", "pns:Y1:Y2") not in cells
    assert len(cells) == 5

    fig, ax = plt.subplots()
    try:
        _rmse_boxplot(rows, ax)
        boxes = [p for p in ax.patches if isinstance(p, PathPatch)]
        assert len(boxes) == 5
    finally:
        plt.close(fig)


def test_rmse_render_is_byte_stable(rmse_csv, tmp_path):
    a = render(PlotSpec(str(rmse_csv), "rmse_boxplot", str(tmp_path / "a.svg")))
    b = render(PlotSpec(str(rmse_csv), "rmse_boxplot", str(tmp_path / "b.svg")))
    first = a.read_bytes()
    assert first == b.read_bytes()
    assert first.lstrip().startswith(b"<?xml")
    # and a date never sneaks in to break reruns on another day
    assert b"dc:date" not in first


def test_single_row_renders_a_degenerate_box(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("model_index,method,query,rmse\n0,ms-o,pns:X:Y1,0.05\n")
    out = render(PlotSpec(str(path), "rmse_boxplot", str(tmp_path / "one.svg")))
    assert out.stat().st_size > 0


def test_png_output_renders(rmse_csv, tmp_path):
    out = render(PlotSpec(str(rmse_csv), "rmse_boxplot", str(tmp_path / "a.png")))
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


# ---------- length bars ----------


def test_length_bars_skip_cells_without_a_mean(lengths_csv):
    rows = read_rows(lengths_csv, "length_bars")
    fig, ax = plt.subplots()
    try:
        _length_bars(rows, ax)
        bars = [p for p in ax.patches if isinstance(p, Rectangle)]
        # 3 regimes x 2 queries minus the empty mm-o cell
        assert len(bars) == 5
    finally:
        plt.close(fig)


def test_length_bars_render_is_byte_stable(lengths_csv, tmp_path):
    a = render(PlotSpec(str(lengths_csv), "length_bars", str(tmp_path / "a.svg")))
    b = render(PlotSpec(str(lengths_csv), "length_bars", str(tmp_path / "b.svg")))
    assert a.read_bytes() == b.read_bytes()


# ---------- containment table ----------


def test_containment_table_renders(containment_csv, tmp_path):
    out = render(
        PlotSpec(str(containment_csv), "containment_table", str(tmp_path / "t.svg"))
    )
    text = out.read_text()
    # percentages appear as drawn text; unsolved pairs render as dashes
    assert "88.0%" in text
    assert "s-oe vs s-o" in text
    assert "-" in text


# ---------- command line ----------


def test_cli_renders_and_prints_the_path(rmse_csv, tmp_path, capsys):
    out = tmp_path / "fig.svg"
    code = main(
        ["render", "--kind", "rmse_boxplot", "--in", str(rmse_csv), "--out", str(out)]
    )
    assert code == 0
    assert out.exists()
    assert str(out) in capsys.readouterr().out


def test_cli_reports_a_missing_file(tmp_path, capsys):
    code = main(
        [
            "render",
            "--kind",
            "rmse_boxplot",
            "--in",
            str(tmp_path / "nope.csv"),
            "--out",
            str(tmp_path / "fig.svg"),
        ]
    )
    assert code == 1
    assert "plots:" in capsys.readouterr().err


def test_cli_rejects_unknown_kind(rmse_csv, tmp_path):
    with pytest.raises(SystemExit):
        main(
            [
                "render",
                "--kind",
                "pie",
                "--in",
                str(rmse_csv),
                "--out",
                str(tmp_path / "fig.svg"),
            ]
        )


# ---------- isolation ----------


def test_rendering_never_touches_the_solver_package(rmse_csv, tmp_path):
    render(PlotSpec(str(rmse_csv), "rmse_boxplot", str(tmp_path / "iso.svg")))
    assert not any(m == "cfbounds" or m.startswith("cfbounds.") for m in sys.modules)
