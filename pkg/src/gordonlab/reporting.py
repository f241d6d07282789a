"""CSV / JSON serialization of reports and minimal SVG line charts."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from xml.sax.saxutils import escape

from .gordon import GordonReport
from .nodecay import WitnessReport

GORDON_COLUMNS = ["m", "a_m", "q_m", "alpha_err_upper", "I_m", "C", "log_scaled", "osc_bound", "sing_bound"]
WITNESS_COLUMNS = ["E", "m", "q_m", "sup_diff_sampled", "sup_diff_rigorous", "pass", "witness_x", "witness_norm"]
MONODROMY_COLUMNS = ["E", "m", "period", "trace", "det", "ch_residual", "m11", "m12", "m21", "m22"]
CF_COLUMNS = ["m", "a_m", "p_m", "q_m", "enclosure", "certified"]


def fmt_float(x) -> str:
    """17 significant digits; empty for None; nan/inf spelled out."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def fmt_rational(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def gordon_rows(reports) -> list[dict]:
    rows = []
    for rep in reports:
        for r in rep.rows:
            rows.append(
                {
                    "m": str(r.m),
                    "a_m": str(r.a_m),
                    "q_m": str(r.q_m),
                    "alpha_err_upper": fmt_float(r.alpha_err_upper),
                    "I_m": fmt_float(r.I_m),
                    "C": fmt_float(r.C),
                    "log_scaled": fmt_float(r.log_scaled),
                    "osc_bound": fmt_float(r.osc_bound),
                    "sing_bound": fmt_float(r.sing_bound),
                }
            )
    return rows


def gordon_json(reports: list[GordonReport]) -> dict:
    out = []
    for rep in reports:
        out.append(
            {
                "label": rep.label,
                "C": rep.C,
                "decreasing": rep.decreasing,
                "rows": [
                    {
                        **row,
                        "alpha_err_upper_exact": fmt_rational(r.alpha_err_upper),
                        "I_m_exact": None if r.I_exact is None else fmt_rational(r.I_exact),
                        "method": r.method,
                    }
                    for row, r in zip(gordon_rows([rep]), rep.rows)
                ],
            }
        )
    return {"gordon": out}


def witness_rows(reports: list[WitnessReport]) -> list[dict]:
    rows = []
    for rep in reports:
        for r in rep.rows:
            base = {
                "E": fmt_float(rep.energy),
                "m": str(r.m),
                "q_m": str(r.q_m),
                "sup_diff_sampled": fmt_float(r.sup_diff_sampled),
                "sup_diff_rigorous": fmt_float(r.sup_diff_rigorous),
                "pass": "true" if r.passed else "false",
            }
            if not r.witnesses:
                rows.append({**base, "witness_x": "", "witness_norm": ""})
            for w in r.witnesses:
                rows.append({**base, "witness_x": fmt_rational(w.x), "witness_norm": fmt_float(w.norm)})
    return rows


def witness_json(reports: list[WitnessReport]) -> dict:
    out = []
    for rep in reports:
        out.append(
            {
                "E": rep.energy,
                "m0": rep.m0,
                "D": rep.D,
                "incomplete": rep.incomplete,
                "note": rep.note,
                "rows": [
                    {
                        "m": r.m,
                        "q_m": str(r.q_m),
                        "sup_diff_sampled": r.sup_diff_sampled,
                        "sup_diff_rigorous": None if math.isnan(r.sup_diff_rigorous) else r.sup_diff_rigorous,
                        "pass": r.passed,
                        "n_samples": r.n_samples,
                        "three_point": None
                        if r.three_point is None
                        else {"norms": list(r.three_point.norms), "trace": r.three_point.trace, "case": r.three_point.case},
                        "gronwall": [
                            {"x": fmt_rational(g.x), "lhs": g.lhs, "log_rhs": g.log_rhs, "C": g.C, "pass": g.passed}
                            for g in r.gronwall
                        ],
                        "witnesses": [
                            {
                                "x": fmt_rational(w.x),
                                "norm": w.norm,
                                "squared_norm": w.squared_norm,
                                "approximant_norm": w.norm_approximant,
                                "verified_norm": w.verified_norm,
                            }
                            for w in r.witnesses
                        ],
                    }
                    for r in rep.rows
                ],
            }
        )
    return {"witness": out}


def to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: row.get(c, "") for c in columns})
    return buf.getvalue()


def to_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * step:
        ticks.append(t)
        t += step
    return ticks


def svg_line_plot(series: list[tuple[str, list[float], list[float]]], title: str, xlabel: str, ylabel: str,
                  width: int = 640, height: int = 400) -> str:
    """Line chart of ``(label, xs, ys)`` series; non-finite points are dropped."""
    pts = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
    if not pts:
        pts = [(0.0, 0.0), (1.0, 1.0)]
    xmin, xmax = min(p[0] for p in pts), max(p[0] for p in pts)
    ymin, ymax = min(p[1] for p in pts), max(p[1] for p in pts)
    if xmax == xmin:
        xmin, xmax = xmin - 1, xmax + 1
    if ymax == ymin:
        ymin, ymax = ymin - 1, ymax + 1
    left, right, top, bottom = 70, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + (x - xmin) / (xmax - xmin) * pw

    def sy(y):
        return top + (ymax - y) / (ymax - ymin) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(xmin, xmax):
        out.append(f'<line x1="{sx(t):.2f}" y1="{top + ph}" x2="{sx(t):.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{top + ph + 18}" text-anchor="middle" font-family="sans-serif" font-size="11">{t:g}</text>')
    for t in _nice_ticks(ymin, ymax):
        out.append(f'<line x1="{left - 5}" y1="{sy(t):.2f}" x2="{left}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{sy(t) + 4:.2f}" text-anchor="end" font-family="sans-serif" font-size="11">{t:g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle" font-family="sans-serif" font-size="12">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for i, (label, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y))
        if coords:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = top + 14 + 16 * i
        out.append(f'<line x1="{left + pw - 130}" y1="{ly}" x2="{left + pw - 110}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw - 105}" y="{ly + 4}" font-family="sans-serif" font-size="11">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
