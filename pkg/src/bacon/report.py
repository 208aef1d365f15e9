"""SVG renderings of calibration results, with CSV companions.

SVG is the only graphic format: textual, diffable, emitted without any
plotting dependency.  Every plotted quantity is written to a CSV alongside
the SVG (same basename), at full float precision, and rendering is a pure
function of those numbers: identical report, byte-identical SVG.
Reliability axes are fixed to [0, 1] regardless of data.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

from .harness import AggregateResult, SeedRun
from .metrics import CalibrationReport

PLOT_KINDS = (
    "FixedReliability",
    "AdaptiveReliability",
    "CIWhisker",
    "ClassScatter",
    "MceScatter",
)

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_IDENTITY_COLOR = "#d62728"
_BAR_COLOR = "#1f77b4"
_HIST_COLOR = "#7f7f7f"


@dataclass
class PlotSpec:
    kind: str
    title: str
    out_path: str

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}")


def _fmt(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".") or "0"


def _svg_document(width: int, height: int, elements: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    return "\n".join([head, *elements, "</svg>"]) + "\n"


def _write_pair(out_path: str, svg: str, header: list[str], rows: list[list]) -> tuple[str, str]:
    out_path = os.fspath(out_path)
    base, _ = os.path.splitext(out_path)
    csv_path = base + ".csv"
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return out_path, csv_path


def _axes(x0, y0, x1, y1, x_label, y_label, ticks=(0.0, 0.5, 1.0)):
    """Square [0,1]x[0,1] frame with identity-style tick labels."""
    parts = [
        f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
        'fill="none" stroke="#333" stroke-width="1"/>'
    ]
    for t in ticks:
        xt = x0 + t * (x1 - x0)
        yt = y0 - t * (y0 - y1)
        parts.append(
            f'<text x="{_fmt(xt)}" y="{y0 + 18}" font-size="11" text-anchor="middle" '
            f'fill="#333">{_fmt(t)}</text>'
        )
        parts.append(
            f'<text x="{x0 - 8}" y="{_fmt(yt + 4)}" font-size="11" text-anchor="end" '
            f'fill="#333">{_fmt(t)}</text>'
        )
    parts.append(
        f'<text x="{(x0 + x1) // 2}" y="{y0 + 34}" font-size="12" text-anchor="middle" '
        f'fill="#111">{x_label}</text>'
    )
    parts.append(
        f'<text x="{x0 - 44}" y="{(y0 + y1) // 2}" font-size="12" text-anchor="middle" '
        f'fill="#111" transform="rotate(-90 {x0 - 44} {(y0 + y1) // 2})">{y_label}</text>'
    )
    return parts


def render_fixed_reliability(report: CalibrationReport, out_path: str) -> tuple[str, str]:
    """Two panels: per-bin accuracy bars against the identity line, then the
    confidence histogram.  Empty bins render no bar."""
    binning = report.fixed_binning
    x0, x1 = 80, 600
    y0, y1 = 360, 40  # reliability panel (y grows downward in SVG)
    h0, h1 = 600, 430  # histogram panel
    sx = lambda v: x0 + v * (x1 - x0)
    sy = lambda v: y0 - v * (y0 - y1)

    elements = [
        f'<text x="340" y="22" font-size="14" text-anchor="middle" fill="#111">'
        f"{report.estimator_tag} reliability (ECE bins)</text>"
    ]
    elements += _axes(x0, y0, x1, y1, "confidence", "accuracy")
    max_count = max(int(binning.counts.max()), 1)

    rows = []
    bars = []
    hist = []
    for m in range(binning.n_bins):
        lo = float(binning.edges[m])
        hi = float(binning.edges[m + 1])
        count = int(binning.counts[m])
        conf = float(binning.conf[m]) if count else None
        acc = float(binning.acc[m]) if count else None
        rows.append([lo, hi, count, conf, acc])
        if count:
            left = sx(lo) + 1
            width = sx(hi) - sx(lo) - 2
            top = sy(acc)
            bars.append(
                f'<rect x="{_fmt(left)}" y="{_fmt(top)}" width="{_fmt(width)}" '
                f'height="{_fmt(y0 - top)}" fill="{_BAR_COLOR}" fill-opacity="0.75"/>'
            )
            htop = h0 - (count / max_count) * (h0 - h1)
            hist.append(
                f'<rect x="{_fmt(left)}" y="{_fmt(htop)}" width="{_fmt(width)}" '
                f'height="{_fmt(h0 - htop)}" fill="{_HIST_COLOR}" fill-opacity="0.8"/>'
            )
    elements += bars
    elements.append(
        f'<line x1="{sx(0)}" y1="{sy(0)}" x2="{sx(1)}" y2="{sy(1)}" '
        f'stroke="{_IDENTITY_COLOR}" stroke-width="1.5"/>'
    )
    elements.append(
        f'<rect x="{x0}" y="{h1}" width="{x1 - x0}" height="{h0 - h1}" '
        'fill="none" stroke="#333" stroke-width="1"/>'
    )
    elements += hist
    elements.append(
        f'<text x="340" y="{h0 + 26}" font-size="12" text-anchor="middle" '
        'fill="#111">confidence histogram</text>'
    )
    svg = _svg_document(640, 650, elements)
    return _write_pair(out_path, svg, ["bin_lo", "bin_hi", "count", "conf", "acc"], rows)


def render_adaptive_reliability(
    report: CalibrationReport, out_path: str, classes: list[int] | None = None
) -> tuple[str, str]:
    """(conf, acc) scatter per class over the constant-frequency ranges; no
    histogram, since range frequencies are uniform by construction."""
    binning = report.adaptive_binning
    wanted = list(range(binning.n_classes)) if classes is None else list(classes)
    x0, x1 = 80, 600
    y0, y1 = 560, 40
    sx = lambda v: x0 + v * (x1 - x0)
    sy = lambda v: y0 - v * (y0 - y1)

    elements = [
        f'<text x="340" y="22" font-size="14" text-anchor="middle" fill="#111">'
        f"{report.estimator_tag} adaptive reliability (ACE ranges)</text>"
    ]
    elements += _axes(x0, y0, x1, y1, "confidence", "accuracy")
    elements.append(
        f'<line x1="{sx(0)}" y1="{sy(0)}" x2="{sx(1)}" y2="{sy(1)}" '
        f'stroke="{_IDENTITY_COLOR}" stroke-width="1.5"/>'
    )
    rows = []
    for cls in wanted:
        color = _PALETTE[cls % len(_PALETTE)]
        for r in range(binning.n_ranges):
            count = int(binning.counts[cls, r])
            if count == 0:
                rows.append([cls, r, 0, None, None])
                continue
            conf = float(binning.conf[cls, r])
            acc = float(binning.acc[cls, r])
            rows.append([cls, r, count, conf, acc])
            elements.append(
                f'<circle cx="{_fmt(sx(conf))}" cy="{_fmt(sy(acc))}" r="4" '
                f'fill="{color}" fill-opacity="0.85"/>'
            )
    svg = _svg_document(640, 620, elements)
    return _write_pair(out_path, svg, ["class", "range", "count", "conf", "acc"], rows)


def render_mce_scatter(runs: list[SeedRun], out_path: str) -> tuple[str, str]:
    """MCE against the frequency of the bin that produced it, across seeds
    and estimators."""
    points = []
    for run in runs:
        for tag in sorted(run.reports):
            report = run.reports[tag]
            points.append((run.seed, tag, report.mce_bin_frequency, report.mce))
    return render_mce_scatter_points(points, out_path)


def render_mce_scatter_points(
    points: list[tuple[int, str, int, float]], out_path: str
) -> tuple[str, str]:
    """Point form of render_mce_scatter: (seed, estimator, frequency, mce)."""
    tags = sorted({p[1] for p in points})
    max_freq = max((p[2] for p in points), default=1) or 1

    x0, x1 = 80, 600
    y0, y1 = 560, 40
    sx = lambda v: x0 + (v / max_freq) * (x1 - x0)
    sy = lambda v: y0 - v * (y0 - y1)
    elements = [
        '<text x="340" y="22" font-size="14" text-anchor="middle" fill="#111">'
        "MCE vs frequency of the maximizing bin</text>"
    ]
    elements += _axes(x0, y0, x1, y1, f"bin frequency (max {max_freq})", "MCE")
    rows = []
    for seed, tag, freq, value in points:
        rows.append([seed, tag, freq, float(value)])
        color = _PALETTE[tags.index(tag) % len(_PALETTE)]
        elements.append(
            f'<circle cx="{_fmt(sx(freq))}" cy="{_fmt(sy(value))}" r="4" '
            f'fill="{color}" fill-opacity="0.8"/>'
        )
    for i, tag in enumerate(tags):
        color = _PALETTE[i % len(_PALETTE)]
        y = 50 + 16 * i
        elements.append(f'<circle cx="500" cy="{y - 4}" r="4" fill="{color}"/>')
        elements.append(
            f'<text x="510" y="{y}" font-size="11" fill="#111">{tag}</text>'
        )
    svg = _svg_document(640, 620, elements)
    return _write_pair(
        out_path, svg, ["seed", "estimator", "mce_bin_frequency", "mce"], rows
    )


def render_ci_whisker(
    agg: AggregateResult, out_path: str, metric: str = "ece"
) -> tuple[str, str]:
    """mean +/- 2 sigma whisker per estimator for one metric."""
    tags = sorted(agg.stats)
    x0, x1 = 80, 600
    y0, y1 = 560, 40
    top = 0.0
    rows = []
    for tag in tags:
        col = agg.stats[tag][metric]
        two_sigma = col.get("two_sigma", 0.0)
        rows.append([
            tag, float(col["mean"]), float(two_sigma),
            float(col["mean"] - two_sigma), float(col["mean"] + two_sigma),
        ])
        top = max(top, col["mean"] + two_sigma)
    top = top * 1.2 or 1.0
    sy = lambda v: y0 - (v / top) * (y0 - y1)

    elements = [
        f'<text x="340" y="22" font-size="14" text-anchor="middle" fill="#111">'
        f"{metric.upper()} mean and 2-sigma band</text>",
        f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
        'fill="none" stroke="#333" stroke-width="1"/>',
    ]
    step = (x1 - x0) / (len(tags) + 1)
    for i, (tag, mean, two_sigma, lo, hi) in enumerate(rows):
        x = x0 + (i + 1) * step
        color = _PALETTE[i % len(_PALETTE)]
        elements.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(sy(lo))}" x2="{_fmt(x)}" y2="{_fmt(sy(hi))}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        elements.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(sy(mean))}" r="5" fill="{color}"/>'
        )
        elements.append(
            f'<text x="{_fmt(x)}" y="{y0 + 18}" font-size="11" text-anchor="middle" '
            f'fill="#111">{tag}</text>'
        )
    svg = _svg_document(640, 620, elements)
    return _write_pair(
        out_path, svg, ["estimator", "mean", "two_sigma", "lo", "hi"], rows
    )


def render_class_scatter(
    runs: list[SeedRun], out_path: str, metric: str = "ece"
) -> tuple[str, str]:
    """Per-class calibration error against per-class accuracy, pooled over
    seeds, one color per estimator."""
    points = []
    for run in runs:
        for tag in sorted(run.reports):
            for cls, entry in sorted(run.reports[tag].per_class.items()):
                points.append((run.seed, tag, cls, entry["accuracy"], entry[metric]))
    tags = sorted({p[1] for p in points})
    top = max((p[4] for p in points), default=1.0) * 1.2 or 1.0

    x0, x1 = 80, 600
    y0, y1 = 560, 40
    sx = lambda v: x0 + v * (x1 - x0)
    sy = lambda v: y0 - (v / top) * (y0 - y1)
    elements = [
        f'<text x="340" y="22" font-size="14" text-anchor="middle" fill="#111">'
        f"per-class {metric.upper()} vs class accuracy</text>",
        f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
        'fill="none" stroke="#333" stroke-width="1"/>',
        f'<text x="340" y="{y0 + 34}" font-size="12" text-anchor="middle" '
        'fill="#111">class accuracy</text>',
    ]
    rows = []
    for seed, tag, cls, acc, value in points:
        rows.append([seed, tag, cls, float(acc), float(value)])
        color = _PALETTE[tags.index(tag) % len(_PALETTE)]
        elements.append(
            f'<circle cx="{_fmt(sx(acc))}" cy="{_fmt(sy(value))}" r="4" '
            f'fill="{color}" fill-opacity="0.8"/>'
        )
    for i, tag in enumerate(tags):
        color = _PALETTE[i % len(_PALETTE)]
        y = 50 + 16 * i
        elements.append(f'<circle cx="120" cy="{y - 4}" r="4" fill="{color}"/>')
        elements.append(f'<text x="130" y="{y}" font-size="11" fill="#111">{tag}</text>')
    svg = _svg_document(640, 620, elements)
    return _write_pair(
        out_path, svg, ["seed", "estimator", "class", "accuracy", metric], rows
    )
