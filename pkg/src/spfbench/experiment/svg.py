"""Dependency-free SVG line charts."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def line_chart(curves, title="", xlabel="step", left_label="", right_label="",
               width=720, height=420):
    """Two-axis chart. ``curves`` is a list of dicts with keys ``label``,
    ``x``, ``y``, ``axis`` ('left' or 'right') and ``dashed``."""
    ml, mr, mt, mb = 70, 70, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    xs = [float(v) for c in curves for v in c["x"]] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x1 = x0 + 1.0

    def yrange(axis):
        ys = [float(v) for c in curves if c.get("axis", "left") == axis for v in c["y"]
              if math.isfinite(float(v))]
        if not ys:
            return 0.0, 1.0
        lo, hi = min(ys), max(ys)
        return (lo, hi) if hi > lo else (lo - 0.5, hi + 0.5)

    ranges = {"left": yrange("left"), "right": yrange("right")}

    def px(x):
        return ml + (float(x) - x0) / (x1 - x0) * pw

    def py(y, axis):
        lo, hi = ranges[axis]
        return mt + ph - (float(y) - lo) / (hi - lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
           f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
           f'<text x="{ml + pw / 2}" y="{height - 10}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.1f}" y="{mt + ph + 16}" text-anchor="middle" font-size="10">{t:.4g}</text>')
    for axis, xpos, anchor in (("left", ml - 6, "end"), ("right", ml + pw + 6, "start")):
        if not any(c.get("axis", "left") == axis for c in curves):
            continue
        for t in _ticks(*ranges[axis]):
            out.append(f'<text x="{xpos}" y="{py(t, axis) + 3:.1f}" text-anchor="{anchor}" '
                       f'font-size="10">{t:.3g}</text>')
    if left_label:
        out.append(f'<text x="16" y="{mt + ph / 2}" font-size="12" text-anchor="middle" '
                   f'transform="rotate(-90 16 {mt + ph / 2})">{escape(left_label)}</text>')
    if right_label:
        xr = width - 14
        out.append(f'<text x="{xr}" y="{mt + ph / 2}" font-size="12" text-anchor="middle" '
                   f'transform="rotate(90 {xr} {mt + ph / 2})">{escape(right_label)}</text>')
    for i, c in enumerate(curves):
        axis = c.get("axis", "left")
        pts = " ".join(f"{px(x):.2f},{py(y, axis):.2f}" for x, y in zip(c["x"], c["y"])
                       if math.isfinite(float(y)))
        color = c.get("color", PALETTE[i % len(PALETTE)])
        dash = ' stroke-dasharray="6,4"' if c.get("dashed") else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.8"{dash} points="{pts}">'
                   f'<title>{escape(c["label"])}</title></polyline>')
        ly = mt + 14 + 14 * i
        out.append(f'<line x1="{ml + 8}" y1="{ly - 4}" x2="{ml + 30}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="1.8"{dash}/>')
        out.append(f'<text x="{ml + 34}" y="{ly}" font-size="10">{escape(c["label"])}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
