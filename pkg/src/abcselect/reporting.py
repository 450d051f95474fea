"""Result emission: summary/estimate CSVs, run-metadata JSON, optional SVG plots.

CSV bytes are a pure function of the result table (floats via shortest
round-trip repr), so reruns with the same config and seed emit identical
files. Volatile values (wall times, library versions) live in the metadata
JSON only. SVGs are written directly -- no plotting library involved.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

__all__ = ["emit_outputs"]

_SUMMARY_COLS = ("study", "method", "quantile", "n", "true_model",
                 "mae", "mse", "per", "n_datasets")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_outputs(table, out_dir, plots: bool = False) -> dict:
    """Write summary.csv, estimates.csv, metadata.json and optional plots/.

    Returns {name: path} for everything written.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = {}

    path = os.path.join(out_dir, "summary.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_SUMMARY_COLS)
        for row in table.rows:
            w.writerow([_fmt(row.get(c)) for c in _SUMMARY_COLS])
    written["summary"] = path

    labels = list(table.model_labels)
    est_cols = (["study", "method", "quantile", "dataset", "true_model"]
                + [f"est_{lab}" for lab in labels]
                + [f"exact_{lab}" for lab in labels]
                + ["n_accepted", "epsilon"])
    path = os.path.join(out_dir, "estimates.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(est_cols)
        for e in table.estimates:
            exact = e["exact"] if e["exact"] is not None else [None] * len(labels)
            w.writerow(
                [e["study"], e["method"], _fmt(float(e["quantile"])), e["dataset"],
                 e["true_model"]]
                + [_fmt(float(p)) for p in e["probs"]]
                + [_fmt(None if x is None else float(x)) for x in exact]
                + [e["n_accepted"], _fmt(float(e["epsilon"]))]
            )
    written["estimates"] = path

    path = os.path.join(out_dir, "metadata.json")
    with open(path, "w") as fh:
        json.dump(table.metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written["metadata"] = path

    if plots:
        plot_dir = os.path.join(out_dir, "plots")
        os.makedirs(plot_dir, exist_ok=True)
        written.update(_emit_plots(table, plot_dir))
    return written


# --------------------------------------------------------------------------
# minimal SVG output


_W, _H, _PAD = 480, 360, 48


def _svg_open(title):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="20" text-anchor="middle" font-size="13" '
        f'font-family="sans-serif">{title}</text>',
    ]


def _axes(lines, x_label, y_label):
    lines.append(
        f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
        'fill="none" stroke="black" stroke-width="1"/>'
    )
    lines.append(
        f'<text x="{_W / 2}" y="{_H - 10}" text-anchor="middle" font-size="11" '
        f'font-family="sans-serif">{x_label}</text>'
    )
    lines.append(
        f'<text x="14" y="{_H / 2}" text-anchor="middle" font-size="11" '
        f'font-family="sans-serif" transform="rotate(-90 14 {_H / 2})">{y_label}</text>'
    )


def _xy(u, v):
    # unit square -> plot frame
    x = _PAD + u * (_W - 2 * _PAD)
    y = _H - _PAD - v * (_H - 2 * _PAD)
    return f"{x:.2f}", f"{y:.2f}"


def _scatter_svg(title, pairs):
    lines = _svg_open(title)
    _axes(lines, "exact or benchmark probability", "ABC estimate")
    x0, y0 = _xy(0.0, 0.0)
    x1, y1 = _xy(1.0, 1.0)
    lines.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" '
                 'stroke="gray" stroke-dasharray="4 3"/>')
    for ex, est in pairs:
        cx, cy = _xy(min(max(ex, 0.0), 1.0), min(max(est, 0.0), 1.0))
        lines.append(f'<circle cx="{cx}" cy="{cy}" r="3" fill="steelblue" '
                     'fill-opacity="0.45"/>')
    lines.append("</svg>")
    return "\n".join(lines)


def _boxplot_svg(title, groups):
    """groups: list of (label, values in [0, 1])."""
    lines = _svg_open(title)
    _axes(lines, "", "estimated probability of the true model")
    k = len(groups)
    for i, (label, vals) in enumerate(groups):
        v = np.asarray(vals, dtype=float)
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        lo, hi = float(v.min()), float(v.max())
        cx = (i + 0.5) / k
        bw = 0.6 / k
        xl, _ = _xy(cx - bw / 2, 0)
        xr, _ = _xy(cx + bw / 2, 0)
        xc, _ = _xy(cx, 0)
        _, ylo = _xy(0, lo)
        _, yhi = _xy(0, hi)
        _, yq1 = _xy(0, q1)
        _, yq3 = _xy(0, q3)
        _, ymed = _xy(0, med)
        lines.append(f'<line x1="{xc}" y1="{ylo}" x2="{xc}" y2="{yhi}" stroke="black"/>')
        lines.append(
            f'<rect x="{xl}" y="{yq3}" width="{float(xr) - float(xl):.2f}" '
            f'height="{float(yq1) - float(yq3):.2f}" fill="lightsteelblue" stroke="black"/>'
        )
        lines.append(f'<line x1="{xl}" y1="{ymed}" x2="{xr}" y2="{ymed}" '
                     'stroke="black" stroke-width="2"/>')
        lines.append(
            f'<text x="{xc}" y="{_H - _PAD + 14}" text-anchor="middle" font-size="9" '
            f'font-family="sans-serif">{label}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines)


def _safe(name):
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in name)


def _emit_plots(table, plot_dir) -> dict:
    written = {}
    by_method = {}
    for e in table.estimates:
        by_method.setdefault((e["method"], e["quantile"]), []).append(e)
    labels = list(table.model_labels)

    # scatter: estimate vs exact/benchmark for the first model's probability
    for (method, q), ents in sorted(by_method.items()):
        pairs = [
            (e["exact"][0], e["probs"][0]) for e in ents if e["exact"] is not None
        ]
        if pairs:
            name = f"scatter_{_safe(method)}_q{q}"
            path = os.path.join(plot_dir, name + ".svg")
            with open(path, "w") as fh:
                fh.write(_scatter_svg(
                    f"{table.study}: {method} (q={q}), probability of {labels[0]}",
                    pairs,
                ))
            written[name] = path

    # boxplots of the true model's estimated probability, grouped by method
    for q in sorted({e["quantile"] for e in table.estimates}):
        groups = []
        for method in dict.fromkeys(e["method"] for e in table.estimates):
            vals = [
                e["probs"][labels.index(e["true_model"])]
                for e in table.estimates
                if e["method"] == method and e["quantile"] == q
                and e["true_model"] in labels
            ]
            if vals:
                groups.append((method, vals))
        if groups:
            name = f"boxplot_true_model_q{q}"
            path = os.path.join(plot_dir, name + ".svg")
            with open(path, "w") as fh:
                fh.write(_boxplot_svg(
                    f"{table.study}: estimated probability of the true model (q={q})",
                    groups,
                ))
            written[name] = path
    return written
