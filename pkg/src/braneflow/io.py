"""CSV / JSON / SVG writers. SVG files are self-contained (no external refs)."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

SCHEMA_VERSION = "1.0"


def _cell(x):
    if x is None:
        return "null"
    if isinstance(x, (float, np.floating)):
        if math.isnan(x):
            return "null"
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])
    return path


def read_csv(path: Path) -> list[dict[str, str]]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return None if math.isnan(f) else f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(path: Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"schema_version": SCHEMA_VERSION, **_jsonable(payload)}
    path.write_text(json.dumps(body, indent=2, allow_nan=False) + "\n")
    return path


# ---------------------------------------------------------------------------
# SVG


def _speed_color(x: float) -> str:
    # dark blue -> yellow ramp
    x = min(max(x, 0.0), 1.0)
    r = int(30 + 220 * x)
    g = int(40 + 180 * x)
    b = int(120 - 90 * x)
    return f"rgb({r},{g},{b})"


def quiver_svg(u, v, du, dv, speed, title: str = "", size: int = 480) -> str:
    """Unit-length arrows colored by speed on the (u, v) plane."""
    u, v, du, dv, speed = (np.asarray(a, dtype=float).ravel() for a in (u, v, du, dv, speed))
    u0, u1, v0, v1 = u.min(), u.max(), v.min(), v.max()
    pad = 20
    span = size - 2 * pad

    def px(x, y):
        return pad + (x - u0) / (u1 - u0) * span, pad + (v1 - y) / (v1 - v0) * span

    n = max(int(round(math.sqrt(u.size))), 2)
    arrow = 0.4 * span / (n - 1)
    smax = speed.max() if speed.max() > 0 else 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<text x="{pad}" y="14" font-size="12">{escape(title)}</text>',
    ]
    for x, y, a, b, sp in zip(u, v, du, dv, speed):
        cx, cy = px(x, y)
        if sp > 0:
            ex, ey = cx + arrow * a / sp, cy - arrow * b / sp
        else:
            ex, ey = cx, cy
        col = _speed_color(sp / smax)
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="1.2" fill="{col}"/>')
        parts.append(f'<line x1="{cx:.2f}" y1="{cy:.2f}" x2="{ex:.2f}" y2="{ey:.2f}" stroke="{col}" stroke-width="1.2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def scatter_svg(x, y, xlim, ylim, title: str = "", size: int = 480, color_values=None) -> str:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    pad = 24
    span = size - 2 * pad
    cv = None if color_values is None else np.asarray(color_values, dtype=float)
    if cv is not None and cv.size:
        lo, hi = np.nanmin(cv), np.nanmax(cv)
        cv = (cv - lo) / (hi - lo) if hi > lo else np.zeros_like(cv)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="none" stroke="black" stroke-width="0.5"/>',
        f'<text x="{pad}" y="16" font-size="12">{escape(title)}</text>',
    ]
    for i, (a, b) in enumerate(zip(x, y)):
        if not (math.isfinite(a) and math.isfinite(b)):
            continue
        if not (xlim[0] <= a <= xlim[1] and ylim[0] <= b <= ylim[1]):
            continue
        cx = pad + (a - xlim[0]) / (xlim[1] - xlim[0]) * span
        cy = pad + (ylim[1] - b) / (ylim[1] - ylim[0]) * span
        col = _speed_color(cv[i]) if cv is not None else "rgb(110,40,160)"
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="1.5" fill="{col}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
