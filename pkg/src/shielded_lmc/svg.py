"""Minimal SVG 1.1 output: scatter plots with obstacles and SER curves."""

import math
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["scatter_svg", "ser_svg"]

_W, _H, _PAD = 480, 480, 40
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]


class _Frame:
    def __init__(self, x0, x1, y0, y1, log_y=False):
        self.x0, self.x1, self.y0, self.y1, self.log_y = x0, x1, y0, y1, log_y

    def _ty(self, y):
        if self.log_y:
            y, y0, y1 = math.log10(y), math.log10(self.y0), math.log10(self.y1)
        else:
            y0, y1 = self.y0, self.y1
        return _H - _PAD - (y - y0) / (y1 - y0) * (_H - 2 * _PAD)

    def __call__(self, x, y):
        px = _PAD + (x - self.x0) / (self.x1 - self.x0) * (_W - 2 * _PAD)
        return px, self._ty(y)

    def scale(self, r):
        return r / (self.x1 - self.x0) * (_W - 2 * _PAD)


def _doc(body, title):
    head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_W}" height="{_H}">\n'
            f'<rect width="{_W}" height="{_H}" fill="white"/>\n'
            f'<text x="{_W / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>\n')
    return head + "\n".join(body) + "\n</svg>\n"


def scatter_svg(samples, obstacles, means, box=((-6.0, -6.0), (6.0, 6.0)), title="", max_points=5000):
    """Samples as dots, sphere obstacles as circles, means as crosses."""
    (x0, y0), (x1, y1) = box
    f = _Frame(x0, x1, y0, y1)
    pts = np.asarray(samples, dtype=float).reshape(-1, 2)
    if len(pts) > max_points:
        pts = pts[np.linspace(0, len(pts) - 1, max_points).astype(int)]
    body = [f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
            f'fill="none" stroke="black"/>']
    for x, y in pts:
        if x0 <= x <= x1 and y0 <= y <= y1:
            px, py = f(x, y)
            body.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="1" fill="{_COLORS[0]}" fill-opacity="0.4"/>')
    for o in obstacles:
        if o.kind == "sphere":
            px, py = f(*o.center[:2])
            body.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{f.scale(o.radius):.2f}" '
                        f'fill="gray" fill-opacity="0.5" stroke="black"/>')
    for m in np.atleast_2d(means):
        px, py = f(*m[:2])
        body.append(f'<path d="M{px - 6:.2f},{py - 6:.2f} L{px + 6:.2f},{py + 6:.2f} '
                    f'M{px - 6:.2f},{py + 6:.2f} L{px + 6:.2f},{py - 6:.2f}" stroke="black" stroke-width="2"/>')
    return _doc(body, title)


def ser_svg(curves, title="SER vs SNR", floor=1e-4):
    """Log-scale SER curves; ``curves`` maps a label to ``(snr_list, ser_list)``."""
    snrs = [s for xs, _ in curves.values() for s in xs]
    f = _Frame(min(snrs), max(snrs) if max(snrs) > min(snrs) else min(snrs) + 1, floor, 1.0, log_y=True)
    body = [f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
            f'fill="none" stroke="black"/>']
    for k, (label, (xs, ys)) in enumerate(curves.items()):
        color = _COLORS[k % len(_COLORS)]
        pts = " ".join("{:.2f},{:.2f}".format(*f(x, max(y, floor))) for x, y in zip(xs, ys))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        body.append(f'<text x="{_W - _PAD - 4}" y="{_PAD + 16 * (k + 1)}" text-anchor="end" '
                    f'font-size="12" fill="{color}">{escape(label)}</text>')
    for s in sorted(set(snrs)):
        px, py = f(s, floor)
        body.append(f'<text x="{px:.2f}" y="{py + 16:.2f}" text-anchor="middle" font-size="11">{s:g} dB</text>')
    return _doc(body, title)
