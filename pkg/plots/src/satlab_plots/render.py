"""Render experiment figures from satlab CSV files.

Every plotted number is read verbatim from a CSV cell; aggregation
(windowing, binning, crossings) happens upstream in the experiment harness.
Rendering is deterministic: fixed figure geometry, fonts, and colors, and
PNG output carries no varying metadata, so identical inputs produce
byte-identical images.

CSV schemas consumed (as documented by the experiment harness):
  phase:          family,n,alpha,samples,sat,p_sat[,median_decisions][,crossing_alpha]
  accuracy-alpha: alpha_center,window_lo,window_hi,samples,accuracy
  accuracy-ratio: ratio_lo,ratio_hi,region,samples,accuracy
  confusion:      true_label,pred_sat,pred_unsat,samples
  tokens:         alpha,samples,median_output_tokens,q1_output_tokens,q3_output_tokens
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

ALPHA_C_3SAT = 4.267

KINDS = ("phase", "accuracy-alpha", "accuracy-ratio", "confusion", "tokens")

REQUIRED_COLUMNS = {
    "phase": ["alpha", "samples", "p_sat"],
    "accuracy-alpha": ["alpha_center", "samples", "accuracy"],
    "accuracy-ratio": ["ratio_lo", "ratio_hi", "region", "samples", "accuracy"],
    "confusion": ["true_label", "pred_sat", "pred_unsat", "samples"],
    "tokens": ["alpha", "samples", "median_output_tokens",
               "q1_output_tokens", "q3_output_tokens"],
}

_FIGSIZE = (7.0, 4.4)
_DPI = 120
_COLORS = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f"]


class SchemaError(ValueError):
    """A CSV is missing columns the requested figure needs."""

    def __init__(self, path: str, missing: list[str]):
        super().__init__(f"{path}: missing columns {missing}")
        self.missing = missing


@dataclass
class FigureSpec:
    kind: str
    inputs: list[str]
    out_path: str
    labels: list[str] = field(default_factory=list)
    alpha_c: float = ALPHA_C_3SAT
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        while len(self.labels) < len(self.inputs):
            self.labels.append(Path(self.inputs[len(self.labels)]).stem)


def read_rows(path: str, kind: str) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS[kind] if c not in header]
        if missing:
            raise SchemaError(path, missing)
        return list(reader)


def _f(value: str | None) -> float | None:
    if value is None or value == "":
        return None
    return float(value)


def _style(ax):
    ax.grid(True, alpha=0.3, linewidth=0.5)
    ax.spines["top"].set_visible(False)


def _alpha_c_line(ax, alpha_c: float):
    ax.axvline(alpha_c, color="#2ca02c", linestyle="--", linewidth=1.2,
               label=f"alpha_c = {alpha_c}")


def build_figure(spec: FigureSpec):
    """Build the matplotlib figure for a spec (render() saves it)."""
    plt.rcParams.update({"font.size": 9, "font.family": "DejaVu Sans"})
    builder = {
        "phase": _build_phase,
        "accuracy-alpha": _build_accuracy_alpha,
        "accuracy-ratio": _build_accuracy_ratio,
        "confusion": _build_confusion,
        "tokens": _build_tokens,
    }[spec.kind]
    fig = builder(spec)
    if spec.title:
        fig.suptitle(spec.title)
    return fig


def _build_phase(spec: FigureSpec):
    rows = read_rows(spec.inputs[0], "phase")
    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    by_n: dict[str, list[dict]] = {}
    for row in rows:
        by_n.setdefault(row.get("n", ""), []).append(row)
    for i, (n, group) in enumerate(sorted(by_n.items())):
        xs = [_f(r["alpha"]) for r in group]
        ys = [_f(r["p_sat"]) for r in group]
        label = "P(SAT)" if len(by_n) == 1 else f"P(SAT), n={n}"
        ax.plot(xs, ys, color=_COLORS[0], marker="o", markersize=3,
                linewidth=1.4, label=label,
                alpha=1.0 - 0.5 * i / max(1, len(by_n) - 1) if len(by_n) > 1 else 1.0)
    ax.set_xlabel("clause density alpha = m/n")
    ax.set_ylabel("P(SAT)", color=_COLORS[0])
    ax.set_ylim(-0.04, 1.04)
    _alpha_c_line(ax, spec.alpha_c)
    crossing = next((_f(r.get("crossing_alpha")) for r in rows
                     if _f(r.get("crossing_alpha")) is not None), None)
    if crossing is not None:
        ax.axvline(crossing, color="#555555", linestyle=":", linewidth=1.2,
                   label=f"empirical 0.5 crossing = {crossing:.3f}")
        ax.plot([crossing], [0.5], marker="x", color="#555555", markersize=7)
    if any(_f(r.get("median_decisions")) is not None for r in rows):
        twin = ax.twinx()
        for n, group in sorted(by_n.items()):
            xs = [_f(r["alpha"]) for r in group]
            ds = [_f(r.get("median_decisions")) for r in group]
            twin.plot(xs, ds, color=_COLORS[1], linewidth=1.4,
                      label="median decisions")
        twin.set_ylabel("median solver decisions", color=_COLORS[1])
        twin.spines["top"].set_visible(False)
    _style(ax)
    ax.legend(loc="center left", fontsize=8)
    fig.tight_layout()
    return fig


def _build_accuracy_alpha(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    for i, (path, label) in enumerate(zip(spec.inputs, spec.labels)):
        rows = read_rows(path, "accuracy-alpha")
        xs = [_f(r["alpha_center"]) for r in rows]
        ys = [_f(r["accuracy"]) for r in rows]
        ax.plot(xs, ys, color=_COLORS[i % len(_COLORS)], marker="o",
                markersize=3, linewidth=1.4, label=label)
    ax.set_xlabel("clause density alpha (window center)")
    ax.set_ylabel("accuracy")
    ax.set_ylim(-0.04, 1.04)
    _alpha_c_line(ax, spec.alpha_c)
    _style(ax)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def _build_accuracy_ratio(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    for i, (path, label) in enumerate(zip(spec.inputs, spec.labels)):
        rows = read_rows(path, "accuracy-ratio")
        color = _COLORS[i % len(_COLORS)]
        for region, style in (("HARD", "-"), ("EASY", "--")):
            group = [r for r in rows if r["region"] == region]
            if not group:
                continue
            xs = [(_f(r["ratio_lo"]) + _f(r["ratio_hi"])) / 2 for r in group]
            ys = [_f(r["accuracy"]) for r in group]
            ax.plot(xs, ys, style, color=color, marker="o", markersize=3,
                    linewidth=1.4, label=f"{label} ({region.lower()})")
    ax.set_xlabel("satisfiability ratio (model count / 2^n)")
    ax.set_ylabel("accuracy")
    ax.set_ylim(-0.04, 1.04)
    _style(ax)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def _build_confusion(spec: FigureSpec):
    rows = read_rows(spec.inputs[0], "confusion")
    by_label = {r["true_label"]: r for r in rows}
    grid = [
        [_f(by_label.get("SAT", {}).get("pred_sat")),
         _f(by_label.get("UNSAT", {}).get("pred_sat"))],
        [_f(by_label.get("SAT", {}).get("pred_unsat")),
         _f(by_label.get("UNSAT", {}).get("pred_unsat"))],
    ]
    fig, ax = plt.subplots(figsize=(4.4, 4.0), dpi=_DPI)
    shown = [[v if v is not None else 0.0 for v in row] for row in grid]
    ax.imshow(shown, cmap="Blues", vmin=0.0, vmax=1.0)
    for r in range(2):
        for c in range(2):
            value = grid[r][c]
            text = "n/a" if value is None else f"{value}"
            ax.text(c, r, text, ha="center", va="center",
                    color="black" if (grid[r][c] or 0) < 0.6 else "white",
                    fontsize=10)
    ax.set_xticks([0, 1], ["SAT", "UNSAT"])
    ax.set_yticks([0, 1], ["pred SAT", "pred UNSAT"])
    ax.set_xlabel("true label (column-normalized)")
    fig.tight_layout()
    return fig


def _build_tokens(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    for i, (path, label) in enumerate(zip(spec.inputs, spec.labels)):
        rows = read_rows(path, "tokens")
        color = _COLORS[i % len(_COLORS)]
        xs = [_f(r["alpha"]) for r in rows]
        med = [_f(r["median_output_tokens"]) for r in rows]
        q1 = [_f(r["q1_output_tokens"]) for r in rows]
        q3 = [_f(r["q3_output_tokens"]) for r in rows]
        ax.plot(xs, med, color=color, marker="o", markersize=3,
                linewidth=1.4, label=label)
        ax.fill_between(xs, q1, q3, color=color, alpha=0.18, linewidth=0)
    ax.set_xlabel("clause density alpha")
    ax.set_ylabel("output tokens (median, IQR band)")
    _alpha_c_line(ax, spec.alpha_c)
    _style(ax)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> str:
    """Render to spec.out_path; returns the path written."""
    fig = build_figure(spec)
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_kwargs = {}
    if out.suffix.lower() == ".png":
        save_kwargs["metadata"] = {"Software": None}
    elif out.suffix.lower() == ".svg":
        save_kwargs["metadata"] = {"Date": None, "Creator": None}
    fig.savefig(out, **save_kwargs)
    plt.close(fig)
    return str(out)
