"""SVG rendering of single curve frames.

Style keys (all optional):

    stroke        path colour when no colour map is used ("#1f4e79")
    stroke_width  in user units relative to the curve size (0.004 * extent)
    normals       draw unit normals every ``normal_stride`` samples (False)
    normal_stride (8)
    normal_length as a fraction of the extent (0.05)
    colormap      colour segments by curvature (False)
    frame, time   written into the <metadata> element when present
    size          pixel width/height of the larger side (512)
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .geometry import CurveState, build_geometry

_DEFAULTS = {"stroke": "#1f4e79", "stroke_width": None, "normals": False, "normal_stride": 8,
             "normal_length": 0.05, "colormap": False, "size": 512}


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _color(u: float) -> str:
    """Blue -> red ramp for u in [0, 1]."""
    u = min(max(u, 0.0), 1.0)
    r, g, b = int(255 * u), int(80 * (1 - abs(2 * u - 1))), int(255 * (1 - u))
    return f"#{r:02x}{g:02x}{b:02x}"


def emit_svg_frame(curve: CurveState, style: dict | None = None) -> str:
    """Return an SVG document showing the closed curve.

    The y axis is flipped so that the picture has the usual orientation.
    The viewBox is the bounding box padded by 10% of its larger side.
    """
    st = {**_DEFAULTS, **(style or {})}
    pts = np.asarray(curve.points, dtype=float)
    x, y = pts[:, 0], -pts[:, 1]
    xmin, xmax, ymin, ymax = x.min(), x.max(), y.min(), y.max()
    extent = max(xmax - xmin, ymax - ymin, 1e-12)
    pad = 0.1 * extent
    vb = (xmin - pad, ymin - pad, xmax - xmin + 2 * pad, ymax - ymin + 2 * pad)
    scale = st["size"] / max(vb[2], vb[3])
    width = st["stroke_width"] or 0.004 * extent

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{" ".join(map(_fmt, vb))}" '
           f'width="{_fmt(vb[2] * scale)}" height="{_fmt(vb[3] * scale)}">']
    meta = {key: st[key] for key in ("frame", "time") if key in st}
    if meta:
        body = "".join(f'<{k}>{escape(str(v) if k == "frame" else repr(float(v)))}</{k}>'
                       for k, v in meta.items())
        out.append(f"<metadata>{body}</metadata>")

    if st["colormap"] or st["normals"]:
        cache = build_geometry(curve)
    if st["colormap"]:
        k = cache.k
        lo, hi = float(k.min()), float(k.max())
        span = hi - lo if hi > lo else 1.0
        out.append(f'<g fill="none" stroke-width="{_fmt(width)}" stroke-linecap="round">')
        n = len(x)
        for i in range(n):
            j = (i + 1) % n
            c = _color((0.5 * (k[i] + k[j]) - lo) / span)
            out.append(f'<line x1="{_fmt(x[i])}" y1="{_fmt(y[i])}" x2="{_fmt(x[j])}" '
                       f'y2="{_fmt(y[j])}" stroke="{c}"/>')
        out.append("</g>")
    else:
        d = "M " + " L ".join(f"{_fmt(a)} {_fmt(b)}" for a, b in zip(x, y)) + " Z"
        out.append(f'<path d="{d}" fill="none" stroke="{escape(st["stroke"])}" '
                   f'stroke-width="{_fmt(width)}" stroke-linejoin="round"/>')

    if st["normals"]:
        length = st["normal_length"] * extent
        nx, ny = cache.normal[:, 0], -cache.normal[:, 1]
        out.append(f'<g stroke="#c0392b" stroke-width="{_fmt(0.5 * width)}">')
        for i in range(0, len(x), max(1, int(st["normal_stride"]))):
            out.append(f'<line x1="{_fmt(x[i])}" y1="{_fmt(y[i])}" '
                       f'x2="{_fmt(x[i] + length * nx[i])}" y2="{_fmt(y[i] + length * ny[i])}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
