"""Deterministic CSV, JSON and SVG writers for run outputs."""
from __future__ import annotations

import csv
import json
import math
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


def cell(x) -> str:
    """Shortest round-trip text for numbers; empty for missing or non-finite."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return repr(x) if math.isfinite(x) else ""
    if isinstance(x, date):
        return x.isoformat()
    return str(x)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([cell(x) for x in r])
    return path


def _jsonable(x):
    if isinstance(x, Mapping):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in (x.tolist() if isinstance(x, np.ndarray) else x)]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (date, Path)):
        return str(x)
    return x


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2) + "\n")
    return path


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def svg_lines(series: Mapping[str, Sequence[float]], title: str = "", width: int = 800, height: int = 400) -> str:
    """A bare polyline chart: one line per named series on a shared y-scale."""
    pad_l, pad_r, pad_t, pad_b = 70, 20, 30, 30
    w, h = width - pad_l - pad_r, height - pad_t - pad_b
    finite = [np.asarray(v, dtype=float) for v in series.values()]
    allv = np.concatenate(finite) if finite else np.zeros(1)
    allv = allv[np.isfinite(allv)]
    lo, hi = (float(allv.min()), float(allv.max())) if len(allv) else (0.0, 1.0)
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    n = max((len(v) for v in finite), default=1)

    def xy(i, v):
        x = pad_l + (w * i / (n - 1) if n > 1 else 0.0)
        y = pad_t + h * (1.0 - (v - lo) / (hi - lo))
        return f"{x:.2f},{y:.2f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{pad_l}" y="{pad_t}" width="{w}" height="{h}" fill="none" stroke="#888"/>',
        f'<text x="{pad_l}" y="{pad_t - 10}" font-size="14">{_esc(title)}</text>',
        f'<text x="{pad_l - 5}" y="{pad_t + 4}" font-size="10" text-anchor="end">{hi:.6g}</text>',
        f'<text x="{pad_l - 5}" y="{pad_t + h}" font-size="10" text-anchor="end">{lo:.6g}</text>',
    ]
    for k, (name, v) in enumerate(series.items()):
        colour = _PALETTE[k % len(_PALETTE)]
        pts = " ".join(xy(i, x) for i, x in enumerate(v) if math.isfinite(x))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{pts}"/>')
        out.append(
            f'<text x="{pad_l + 8}" y="{pad_t + 16 + 14 * k}" font-size="11" fill="{colour}">{_esc(name)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_svg(path: str | Path, series: Mapping[str, Sequence[float]], title: str = "") -> Path:
    path = Path(path)
    path.write_text(svg_lines(series, title))
    return path
