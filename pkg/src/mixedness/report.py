"""Experiment reports and their CSV / JSON / JSON-lines / SVG renderings."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import __version__


@dataclass
class ExperimentReport:
    command: str
    config: dict
    header: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    version: str = __version__
    plot: dict | None = None

    def meta(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "summary": self.summary,
            "wall_clock": self.wall_clock,
            "version": self.version,
        }

    def to_json(self) -> dict:
        out = self.meta()
        out["header"] = list(self.header)
        out["rows"] = self.rows
        return out


def plain(v):
    """numpy scalars and tuples -> built-in JSON-friendly values."""
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [plain(x) for x in v]
    if isinstance(v, dict):
        return {k: plain(x) for k, x in v.items()}
    return v


def _cell(v) -> str:
    v = plain(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.header)
    for row in report.rows:
        w.writerow([_cell(row.get(k)) for k in report.header])
    return buf.getvalue()


def render_json(report: ExperimentReport) -> str:
    return json.dumps(plain(report.to_json()), indent=2) + "\n"


def render_jsonl(report: ExperimentReport) -> str:
    return "".join(json.dumps(plain(row)) + "\n" for row in report.rows)


# ---------------------------------------------------------------------------
# SVG

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 70, "right": 160, "top": 40, "bottom": 55}
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _scale(lo: float, hi: float, log: bool):
    if log:
        lo, hi = math.log10(lo), math.log10(hi)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def line_plot(series: dict, title: str, xlabel: str, ylabel: str, logx: bool = False, logy: bool = False) -> str:
    """Minimal SVG line chart. `series` maps label -> (xs, ys); non-finite or non-positive-on-log points are dropped."""

    def keep(x, y):
        ok = math.isfinite(x) and math.isfinite(y)
        return ok and (not logx or x > 0) and (not logy or y > 0)

    clean = {k: [(x, y) for x, y in zip(*v) if keep(x, y)] for k, v in series.items()}
    pts = [p for v in clean.values() for p in v]
    xs = [p[0] for p in pts] or [1.0]
    ys = [p[1] for p in pts] or [1.0]
    x0, x1 = _scale(min(xs), max(xs), logx)
    y0, y1 = _scale(min(ys), max(ys), logy)
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        v = math.log10(x) if logx else x
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def py(y):
        v = math.log10(y) if logy else y
        return MARGIN["top"] + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<line x1="{MARGIN["left"]}" y1="{MARGIN["top"] + ph}" x2="{MARGIN["left"] + pw}" y2="{MARGIN["top"] + ph}" stroke="black"/>',
        f'<line x1="{MARGIN["left"]}" y1="{MARGIN["top"]}" x2="{MARGIN["left"]}" y2="{MARGIN["top"] + ph}" stroke="black"/>',
    ]
    for i in range(5):
        fx = x0 + (x1 - x0) * i / 4
        fy = y0 + (y1 - y0) * i / 4
        vx = 10**fx if logx else fx
        vy = 10**fy if logy else fy
        gx = MARGIN["left"] + pw * i / 4
        gy = MARGIN["top"] + ph - ph * i / 4
        out.append(f'<text x="{gx:.1f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle" font-size="11">{vx:.3g}</text>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{gy + 4:.1f}" text-anchor="end" font-size="11">{vy:.3g}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for i, (label, points) in enumerate(clean.items()):
        color = PALETTE[i % len(PALETTE)]
        if points:
            path = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in points)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{path}"/>')
        ly = MARGIN["top"] + 14 + 18 * i
        lx = WIDTH - MARGIN["right"] + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly + 4}" font-size="11">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(report: ExperimentReport) -> str:
    spec = report.plot
    if spec is None:
        raise ValueError(f"no plot defined for {report.command}")
    series: dict = {}
    for row in report.rows:
        for ycol in spec["y"]:
            label = f'{ycol} {spec["group"]}={row[spec["group"]]}' if spec.get("group") else ycol
            xs, ys = series.setdefault(label, ([], []))
            xs.append(float(row[spec["x"]]))
            ys.append(float(row[ycol]))
    return line_plot(series, spec["title"], spec["x"], spec.get("ylabel", ", ".join(spec["y"])),
                     spec.get("logx", False), spec.get("logy", False))


RENDERERS = {"csv": render_csv, "json": render_json, "jsonl": render_jsonl, "svg": render_svg}


def emit_report(report: ExperimentReport, fmt: str, out: str | None, stream=None) -> list[Path]:
    """Write the report. Non-JSON formats get a `<out>.meta.json` sidecar with config, summary and timing."""
    text = RENDERERS[fmt](report)
    if out is None:
        (stream or sys.stdout).write(text)
        return []
    path = Path(out)
    path.write_text(text)
    written = [path]
    if fmt != "json":
        meta = path.with_name(path.name + ".meta.json")
        meta.write_text(json.dumps(plain(report.meta()), indent=2) + "\n")
        written.append(meta)
    return written
