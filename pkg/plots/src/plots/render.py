"""Render report figures from the experiment harness CSVs.

All statistics are read straight from the CSVs; nothing is computed here
beyond the quantiles matplotlib derives for boxplots. Rendering is pinned
to the Agg backend with a fixed hash salt and stripped date metadata so an
identical rerun produces a byte-identical file.
"""

from dataclasses import dataclass
from pathlib import Path

import csv

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "cfbounds-plots"

import matplotlib.pyplot as plt
from matplotlib.patches import Patch

KINDS = ("rmse_boxplot", "length_bars", "containment_table")

# approximation methods keep their report colors; anything else falls back
METHOD_COLORS = {"mm-o": "tab:blue", "ms-o": "tab:red"}
FALLBACK_COLOR = "tab:gray"

REQUIRED_COLUMNS = {
    "rmse_boxplot": ("model_index", "method", "query", "rmse"),
    "length_bars": ("regime", "query", "n", "mean_length"),
    "containment_table": (
        "regime_a",
        "regime_b",
        "query",
        "n",
        "pct_equal",
        "pct_a_in_b",
        "pct_b_in_a",
        "pct_none",
    ),
}


@dataclass(frozen=True)
class PlotSpec:
    """One figure request: which CSV, which figure kind, where to write."""

    input_csv: str
    kind: str
    output_path: str
    image_format: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(
                f"unknown figure kind {self.kind!r}; expected one of {KINDS}"
            )

    @property
    def format(self) -> str:
        fmt = self.image_format or Path(self.output_path).suffix.lstrip(".")
        fmt = fmt.lower()
        if fmt not in ("svg", "png"):
            raise ValueError(f"unsupported image format {fmt!r}; use svg or png")
        return fmt


# ---------------------------------------------------------------------------
# CSV access
# ---------------------------------------------------------------------------


def read_rows(path, kind: str) -> list[dict]:
    """Data rows of a harness CSV, with comment lines skipped and the
    column set validated for the requested figure kind."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        fields = reader.fieldnames or ()
        missing = [c for c in REQUIRED_COLUMNS[kind] if c not in fields]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def _ordered_unique(values):
    seen = []
    for v in values:
        if v not in seen:
            seen.append(v)
    return seen


def rmse_cells(rows) -> dict[tuple[str, str], list[float]]:
    """Samples grouped by (method, query); pairs with no rows are simply
    absent, which is how a not-computable combination shows up."""
    cells: dict[tuple[str, str], list[float]] = {}
    for row in rows:
        cells.setdefault((row["method"], row["query"]), []).append(
            float(row["rmse"])
        )
    return cells


# ---------------------------------------------------------------------------
# figure builders
# ---------------------------------------------------------------------------


def _rmse_boxplot(rows, ax) -> None:
    cells = rmse_cells(rows)
    queries = _ordered_unique(row["query"] for row in rows)
    methods = _ordered_unique(row["method"] for row in rows)
    width = 0.8 / max(len(methods), 1)
    for j, method in enumerate(methods):
        color = METHOD_COLORS.get(method, FALLBACK_COLOR)
        offset = (j - (len(methods) - 1) / 2) * width
        for i, query in enumerate(queries):
            samples = cells.get((method, query))
            if samples is None:
                continue
            box = ax.boxplot(
                [samples],
                positions=[i + offset],
                widths=width * 0.85,
                patch_artist=True,
            )
            box["boxes"][0].set_facecolor(color)
            box["boxes"][0].set_alpha(0.6)
            for median in box["medians"]:
                median.set_color("black")
    ax.set_xticks(range(len(queries)))
    ax.set_xticklabels(queries)
    ax.set_ylabel("endpoint RMSE vs s-o")
    ax.legend(
        handles=[
            Patch(
                facecolor=METHOD_COLORS.get(m, FALLBACK_COLOR),
                alpha=0.6,
                label=m.upper(),
            )
            for m in methods
        ],
        loc="upper left",
    )


def _length_bars(rows, ax) -> None:
    queries = _ordered_unique(row["query"] for row in rows)
    regimes = _ordered_unique(row["regime"] for row in rows)
    cycle = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    width = 0.8 / max(len(regimes), 1)
    for j, regime in enumerate(regimes):
        offset = (j - (len(regimes) - 1) / 2) * width
        xs, heights = [], []
        for i, query in enumerate(queries):
            for row in rows:
                if (
                    row["regime"] == regime
                    and row["query"] == query
                    and row["mean_length"] != ""
                ):
                    xs.append(i + offset)
                    heights.append(float(row["mean_length"]))
        ax.bar(
            xs,
            heights,
            width=width * 0.9,
            color=cycle[j % len(cycle)],
            label=regime,
        )
    ax.set_xticks(range(len(queries)))
    ax.set_xticklabels(queries)
    ax.set_ylabel("mean interval length")
    ax.legend(loc="upper left")


def _pct(value: str) -> str:
    # pairs with no jointly solved instances leave their percentages blank
    return f"{float(value):.1f}%" if value != "" else "-"


def _containment_table(rows, ax) -> None:
    ax.axis("off")
    header = ["pair", "query", "n", "equal", "a in b", "b in a", "none"]
    body = [
        [
            f"{row['regime_a']} vs {row['regime_b']}",
            row["query"],
            row["n"],
            _pct(row["pct_equal"]),
            _pct(row["pct_a_in_b"]),
            _pct(row["pct_b_in_a"]),
            _pct(row["pct_none"]),
        ]
        for row in rows
    ]
    table = ax.table(cellText=body, colLabels=header, loc="center")
    table.auto_set_font_size(False)
    table.set_fontsize(9)
    table.scale(1.0, 1.3)


_BUILDERS = {
    "rmse_boxplot": _rmse_boxplot,
    "length_bars": _length_bars,
    "containment_table": _containment_table,
}


def render(spec: PlotSpec) -> Path:
    """Build the figure for spec and write it; returns the output path."""
    rows = read_rows(spec.input_csv, spec.kind)
    fmt = spec.format
    fig, ax = plt.subplots(figsize=(7.0, 4.0), dpi=100)
    try:
        _BUILDERS[spec.kind](rows, ax)
        out = Path(spec.output_path)
        metadata = {"Date": None} if fmt == "svg" else None
        fig.savefig(out, format=fmt, metadata=metadata)
    finally:
        plt.close(fig)
    return out
