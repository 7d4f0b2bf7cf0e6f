"""Self-contained SVG rendering of a classifier surface with real/fake scatter.

Colour map: two linear ramps meeting at white.  Value 0 (certainly fake) is
red ``#d7301f`` (215, 48, 31), 0.5 (indifferent) is white ``#ffffff`` and 1
(certainly real) is blue ``#2166ac`` (33, 102, 172).  Real points are drawn
black, fake points green ``#1a9641``.
"""

from __future__ import annotations

import numpy as np

FAKE_RGB = (215, 48, 31)
MID_RGB = (255, 255, 255)
REAL_RGB = (33, 102, 172)
REAL_POINT = "#000000"
FAKE_POINT = "#1a9641"

LEVELS = 64  # colour quantization; lets equal neighbouring cells merge into one rect


def colour(value: float) -> str:
    v = min(max(float(value), 0.0), 1.0)
    if v <= 0.5:
        lo, hi, t = FAKE_RGB, MID_RGB, v / 0.5
    else:
        lo, hi, t = MID_RGB, REAL_RGB, (v - 0.5) / 0.5
    r, g, b = (round(a + (c - a) * t) for a, c in zip(lo, hi))
    return f"#{r:02x}{g:02x}{b:02x}"


def render(grid, values, real=None, fake=None, size=480, max_points=1000) -> str:
    """SVG text for ``values`` (rows = y ascending) over ``grid`` plus optional points."""
    values = np.asarray(values, dtype=float)
    ny, nx = values.shape
    cw, ch = size / nx, size / ny
    q = np.round(np.clip(values, 0, 1) * (LEVELS - 1)) / (LEVELS - 1)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}" shape-rendering="crispEdges">']
    for i in range(ny):
        y = size - (i + 1) * ch  # flip so y increases upwards
        j = 0
        while j < nx:
            k = j
            while k + 1 < nx and q[i, k + 1] == q[i, j]:
                k += 1
            out.append(f'<rect x="{j * cw:.2f}" y="{y:.2f}" width="{(k - j + 1) * cw:.2f}" '
                       f'height="{ch:.2f}" fill="{colour(q[i, j])}"/>')
            j = k + 1

    def to_px(pts):
        pts = np.asarray(pts, dtype=float)[:max_points]
        px = (pts[:, 0] - grid.x_min) / (grid.x_max - grid.x_min) * size
        py = size - (pts[:, 1] - grid.y_min) / (grid.y_max - grid.y_min) * size
        return zip(px, py)

    for pts, fill in ((real, REAL_POINT), (fake, FAKE_POINT)):
        if pts is None or len(pts) == 0:
            continue
        out.append(f'<g fill="{fill}">')
        out.extend(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="1.5"/>' for x, y in to_px(pts))
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
