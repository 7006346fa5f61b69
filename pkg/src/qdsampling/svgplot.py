"""Minimal static SVG line/scatter plots.

Just enough for the report figures: linear axes with "nice" ticks, polylines,
markers with error bars, a legend and multiple panels per document. Output
depends only on the data, so identical inputs give identical files.
"""
from __future__ import annotations

import math
from html import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22", "#17becf")


def _n(x) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".") if math.isfinite(x) else "0"


def nice_ticks(lo, hi, target=5):
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step - 1e-9)
    last = math.floor(hi / step + 1e-9)
    return [round(k * step, 12) for k in range(first, last + 1)]


def _tick_label(v, ticks):
    step = ticks[1] - ticks[0] if len(ticks) > 1 else 1.0
    decimals = max(0, -math.floor(math.log10(step) + 1e-9)) if step > 0 else 0
    return f"{v:.{decimals}f}"


class Panel:
    """One set of axes occupying a rectangle of the document."""

    def __init__(self, x0, y0, width, height, *, title="", xlabel="", ylabel=""):
        self.box = (x0, y0, width, height)
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.items = []  # (kind, data, style)
        self.xlim = self.ylim = None

    def line(self, x, y, color="#000", width=1.5, dash=None, label=None, elem_id=None):
        self.items.append(("line", (np.asarray(x, float), np.asarray(y, float)),
                           dict(color=color, width=width, dash=dash, label=label, id=elem_id)))

    def points(self, x, y, yerr=None, color="#000", radius=2.5, label=None, hollow=False,
               elem_id=None):
        err = None if yerr is None else np.asarray(yerr, float)
        self.items.append(("points", (np.asarray(x, float), np.asarray(y, float), err),
                           dict(color=color, r=radius, label=label, hollow=hollow, id=elem_id)))

    def _limits(self):
        xs, ys = [], []
        for kind, data, _ in self.items:
            xs.append(data[0])
            y = data[1]
            if kind == "points" and data[2] is not None:
                e = np.nan_to_num(data[2])
                ys.extend([y - e, y + e])
            ys.append(y)
        xlim = self.xlim or _span(np.concatenate(xs) if xs else np.zeros(1))
        ylim = self.ylim or _span(np.concatenate(ys) if ys else np.zeros(1), pad=0.05)
        return xlim, ylim

    def render(self) -> str:
        x0, y0, w, h = self.box
        left, right, top, bottom = 62, 12, 26, 42
        px, py, pw, ph = x0 + left, y0 + top, w - left - right, h - top - bottom
        (xa, xb), (ya, yb) = self._limits()
        sx = lambda v: px + (v - xa) / (xb - xa) * pw  # noqa: E731
        sy = lambda v: py + ph - (v - ya) / (yb - ya) * ph  # noqa: E731
        out = ['<g class="panel">']
        out.append(f'<rect x="{_n(px)}" y="{_n(py)}" width="{_n(pw)}" height="{_n(ph)}" '
                   'fill="none" stroke="#333" stroke-width="1"/>')
        xt = nice_ticks(xa, xb)
        yt = nice_ticks(ya, yb)
        for t in xt:
            X = sx(t)
            out.append(f'<line x1="{_n(X)}" y1="{_n(py + ph)}" x2="{_n(X)}" y2="{_n(py + ph + 4)}" '
                       'stroke="#333"/>')
            out.append(f'<text x="{_n(X)}" y="{_n(py + ph + 16)}" text-anchor="middle">'
                       f'{_tick_label(t, xt)}</text>')
        for t in yt:
            Y = sy(t)
            out.append(f'<line x1="{_n(px - 4)}" y1="{_n(Y)}" x2="{_n(px)}" y2="{_n(Y)}" '
                       'stroke="#333"/>')
            out.append(f'<text x="{_n(px - 6)}" y="{_n(Y + 4)}" text-anchor="end">'
                       f'{_tick_label(t, yt)}</text>')
        if self.title:
            out.append(f'<text x="{_n(px + pw / 2)}" y="{_n(py - 9)}" text-anchor="middle" '
                       f'font-weight="bold">{escape(self.title)}</text>')
        if self.xlabel:
            out.append(f'<text x="{_n(px + pw / 2)}" y="{_n(py + ph + 34)}" '
                       f'text-anchor="middle">{escape(self.xlabel)}</text>')
        if self.ylabel:
            cx, cy = x0 + 14, py + ph / 2
            out.append(f'<text x="{_n(cx)}" y="{_n(cy)}" text-anchor="middle" '
                       f'transform="rotate(-90 {_n(cx)} {_n(cy)})">{escape(self.ylabel)}</text>')
        clip = f"clip-{int(x0)}-{int(y0)}"
        out.append(f'<clipPath id="{clip}"><rect x="{_n(px)}" y="{_n(py)}" width="{_n(pw)}" '
                   f'height="{_n(ph)}"/></clipPath>')
        out.append(f'<g clip-path="url(#{clip})">')
        for kind, data, st in self.items:
            id_attr = f' id="{escape(st["id"])}"' if st.get("id") else ""
            if kind == "line":
                x, y = data
                ok = np.isfinite(x) & np.isfinite(y)
                pts = " ".join(f"{_n(sx(a))},{_n(sy(b))}" for a, b in zip(x[ok], y[ok]))
                dash = f' stroke-dasharray="{st["dash"]}"' if st["dash"] else ""
                out.append(f'<polyline{id_attr} points="{pts}" fill="none" stroke="{st["color"]}" '
                           f'stroke-width="{_n(st["width"])}"{dash}/>')
            else:
                x, y, err = data
                out.append(f'<g{id_attr}>')
                fill = "none" if st["hollow"] else st["color"]
                for k, (a, b) in enumerate(zip(x, y)):
                    if not (math.isfinite(a) and math.isfinite(b)):
                        continue
                    if err is not None and math.isfinite(err[k]) and err[k] > 0:
                        out.append(f'<line x1="{_n(sx(a))}" y1="{_n(sy(b - err[k]))}" '
                                   f'x2="{_n(sx(a))}" y2="{_n(sy(b + err[k]))}" '
                                   f'stroke="{st["color"]}"/>')
                    out.append(f'<circle cx="{_n(sx(a))}" cy="{_n(sy(b))}" r="{_n(st["r"])}" '
                               f'fill="{fill}" stroke="{st["color"]}"/>')
                out.append("</g>")
        out.append("</g>")
        labelled = [st for _, _, st in self.items if st.get("label")]
        for k, st in enumerate(labelled):
            ly = py + 12 + 14 * k
            lx = px + pw - 130
            out.append(f'<line x1="{_n(lx)}" y1="{_n(ly - 4)}" '
                       f'x2="{_n(lx + 18)}" y2="{_n(ly - 4)}" '
                       f'stroke="{st["color"]}" stroke-width="2"/>')
            out.append(f'<text x="{_n(lx + 22)}" y="{_n(ly)}">{escape(st["label"])}</text>')
        out.append("</g>")
        return "\n".join(out)


def _span(v, pad=0.0):
    v = v[np.isfinite(v)]
    if v.size == 0:
        return (0.0, 1.0)
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        d = abs(lo) * 0.1 or 1.0
        return (lo - d, hi + d)
    d = (hi - lo) * pad
    return (lo - d, hi + d)


def document(panels, width, height) -> str:
    body = "\n".join(p.render() for p in panels)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">\n'
            f'<rect width="{width}" height="{height}" fill="white"/>\n{body}\n</svg>\n')
