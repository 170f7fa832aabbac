"""Rendering of benchmark and categorisation results: Markdown, CSV and SVG."""
from __future__ import annotations

import csv
import io
import json
from html import escape

from .evaluation import MODEL_NAMES, BenchmarkReport

FONT = "system-ui, -apple-system, 'Segoe UI', sans-serif"
SERIES_COLORS = {"CFS": "#6c757d", "SFS": "#0d6efd"}
HEVNER_COLORS = ("#e41a1c", "#ff7f00", "#a65628", "#984ea3", "#377eb8", "#4daf4a", "#66c2a5", "#f0c419")

MARKDOWN_HEADER = ("Model", "Type", "Feature Set", "Use Features", "Score", "STD")
FOLD_CSV_HEADER = ("model", "target", "feature_set", "n_features", "fold", "r2", "mse")


def report_json(report: BenchmarkReport) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"


def report_markdown(report: BenchmarkReport) -> str:
    lines = [
        "| " + " | ".join(MARKDOWN_HEADER) + " |",
        "|" + "|".join(["---"] * 3 + ["---:"] * 3) + "|",
    ]
    for r in report.rows:
        lines.append(
            f"| {MODEL_NAMES[r.model]} | {r.target.capitalize()} | {r.feature_set} | {r.n_features} "
            f"| {r.score:.3f} | {r.std:.3f} |"
        )
    lines.append("")
    lines.append("| Model | Label Axis | N Of Feature Selected | Dimension Reduce | SFS - CFS |")
    lines.append("|---|---|---:|---:|---:|")
    for (m, t), (n_sel, rate) in report.reduction_rates.items():
        lines.append(
            f"| {MODEL_NAMES[m]} | {t.capitalize()} | {n_sel} | {rate:.1%} | {report.deltas[(m, t)]:+.3f} |"
        )
    return "\n".join(lines) + "\n"


def fold_scores_csv(report: BenchmarkReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FOLD_CSV_HEADER)
    for r in report.rows:
        for f, (score, loss) in enumerate(zip(r.fold_scores, r.fold_losses)):
            writer.writerow([r.model, r.target, r.feature_set, r.n_features, f, repr(float(score)), repr(float(loss))])
    return buf.getvalue()


def _svg_open(width, height, title):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" width="{width}" '
        f'height="{height}" style="font-family: {FONT}; background: #ffffff">',
        f"<title>{escape(title)}</title>",
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]


def _y_axis(out, lo, hi, x0, y0, plot_h, width, ticks=5):
    for i in range(ticks + 1):
        v = lo + (hi - lo) * i / ticks
        y = y0 + plot_h - plot_h * i / ticks
        out.append(f'<line x1="{x0}" y1="{y:.1f}" x2="{width - 20}" y2="{y:.1f}" stroke="#e9ecef"/>')
        out.append(f'<text x="{x0 - 6}" y="{y + 4:.1f}" font-size="11" text-anchor="end">{v:.2f}</text>')


def _score_range(values):
    lo = min(0.0, min(values))
    hi = max(1.0, max(values))
    return lo, hi


def svg_score_bars(report: BenchmarkReport) -> str:
    """Grouped bars of mean R2 per (model, target), CFS next to SFS."""
    cells = list(report.deltas)
    width, height = 120 + 150 * len(cells), 360
    x0, y0, plot_h = 60, 40, 240
    lo, hi = _score_range([r.score for r in report.rows])
    scale = plot_h / (hi - lo)
    out = _svg_open(width, height, "Cross-validated R2, complete vs selected features")
    out.append(f'<text x="{width / 2}" y="22" font-size="14" text-anchor="middle">Mean R2 over '
               f'{report.config.k} folds</text>')
    _y_axis(out, lo, hi, x0, y0, plot_h, width)
    zero_y = y0 + plot_h - (0 - lo) * scale
    for c, (m, t) in enumerate(cells):
        gx = x0 + 20 + c * 150
        for b, fs in enumerate(("CFS", "SFS")):
            r = report.row(m, t, fs)
            top = y0 + plot_h - (r.score - lo) * scale
            y, h = min(top, zero_y), abs(zero_y - top)
            x = gx + b * 55
            out.append(f'<rect x="{x}" y="{y:.1f}" width="50" height="{h:.1f}" fill="{SERIES_COLORS[fs]}">'
                       f"<title>{m} {t} {fs}: {r.score:.3f} +/- {r.std:.3f}</title></rect>")
            out.append(f'<text x="{x + 25}" y="{top - 4:.1f}" font-size="10" text-anchor="middle">{r.score:.3f}</text>')
        out.append(f'<text x="{gx + 52}" y="{y0 + plot_h + 18}" font-size="11" text-anchor="middle">'
                   f"{escape(m.upper())} {escape(t)}</text>")
    for i, fs in enumerate(("CFS", "SFS")):
        lx = x0 + i * 80
        out.append(f'<rect x="{lx}" y="{height - 30}" width="12" height="12" fill="{SERIES_COLORS[fs]}"/>')
        out.append(f'<text x="{lx + 16}" y="{height - 20}" font-size="11">{fs}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def svg_fold_lines(report: BenchmarkReport) -> str:
    """Per-fold R2, one panel per (model, target), CFS and SFS as two lines."""
    cells = list(report.deltas)
    panel_w, panel_h = 320, 220
    width, height = panel_w * 2 + 40, (panel_h + 40) * ((len(cells) + 1) // 2) + 40
    out = _svg_open(width, height, "Per-fold R2")
    values = [s for r in report.rows for s in r.fold_scores]
    lo, hi = _score_range(values)
    for c, (m, t) in enumerate(cells):
        px = 20 + (c % 2) * panel_w
        py = 30 + (c // 2) * (panel_h + 40)
        x0, plot_w, plot_h = px + 45, panel_w - 70, panel_h - 50
        out.append(f'<text x="{px + panel_w / 2}" y="{py}" font-size="12" text-anchor="middle">'
                   f"{escape(MODEL_NAMES[m])} / {escape(t)}</text>")
        for i in range(5):
            v = lo + (hi - lo) * i / 4
            y = py + 10 + plot_h - plot_h * i / 4
            out.append(f'<line x1="{x0}" y1="{y:.1f}" x2="{x0 + plot_w}" y2="{y:.1f}" stroke="#e9ecef"/>')
            out.append(f'<text x="{x0 - 5}" y="{y + 4:.1f}" font-size="9" text-anchor="end">{v:.2f}</text>')
        for fs in ("CFS", "SFS"):
            scores = report.row(m, t, fs).fold_scores
            k = len(scores)
            pts = []
            for f, s in enumerate(scores):
                x = x0 + (plot_w * f / (k - 1) if k > 1 else plot_w / 2)
                y = py + 10 + plot_h - (s - lo) / (hi - lo) * plot_h
                pts.append(f"{x:.1f},{y:.1f}")
            out.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="{SERIES_COLORS[fs]}" stroke-width="2"/>')
        out.append(f'<text x="{x0 + plot_w / 2}" y="{py + panel_h - 12}" font-size="10" text-anchor="middle">fold</text>')
    for i, fs in enumerate(("CFS", "SFS")):
        lx = 20 + i * 80
        out.append(f'<rect x="{lx}" y="{height - 22}" width="12" height="12" fill="{SERIES_COLORS[fs]}"/>')
        out.append(f'<text x="{lx + 16}" y="{height - 12}" font-size="11">{fs}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def svg_va_scatter(points, labels, palette: dict, title="Valence-arousal distribution") -> str:
    """Scatter of (valence, arousal) points coloured by label, with a legend entry per palette label."""
    size, pad = 420, 40
    legend_h = 18 * len(palette) + 10
    out = _svg_open(size + 200, max(size, legend_h + 2 * pad), title)

    def sx(v):
        return pad + (v + 1) / 2 * (size - 2 * pad)

    def sy(a):
        return size - pad - (a + 1) / 2 * (size - 2 * pad)

    out.append(f'<rect x="{pad}" y="{pad}" width="{size - 2 * pad}" height="{size - 2 * pad}" fill="none" stroke="#adb5bd"/>')
    out.append(f'<line x1="{sx(-1)}" y1="{sy(0)}" x2="{sx(1)}" y2="{sy(0)}" stroke="#adb5bd"/>')
    out.append(f'<line x1="{sx(0)}" y1="{sy(-1)}" x2="{sx(0)}" y2="{sy(1)}" stroke="#adb5bd"/>')
    out.append(f'<text x="{size / 2}" y="{size - 8}" font-size="11" text-anchor="middle">valence</text>')
    out.append(f'<text x="12" y="{size / 2}" font-size="11" text-anchor="middle" '
               f'transform="rotate(-90 12 {size / 2})">arousal</text>')
    for (v, a), label in zip(points, labels):
        out.append(f'<circle cx="{sx(v):.1f}" cy="{sy(a):.1f}" r="3" fill="{palette[label]}" fill-opacity="0.8"/>')
    for i, (label, color) in enumerate(palette.items()):
        y = pad + 18 * i
        out.append(f'<g class="legend"><rect x="{size + 10}" y="{y}" width="12" height="12" fill="{color}"/>'
                   f'<text x="{size + 28}" y="{y + 10}" font-size="11">{escape(label)}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
