"""Byte-stable SVG figures of planar domains, Whitney cubes, curves and shadows."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import GeometryError
from .metric import load_domain

PALETTE = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"]
SIZE = 640


def _coords(domain):
    c = domain.space.coords
    if c is None or c.ndim != 2 or c.shape[1] != 2:
        raise GeometryError("no-coordinates", "rendering needs planar coordinates")
    return c


class _Canvas:
    def __init__(self, coords, pad=0.02):
        lo = coords.min(axis=0)
        hi = coords.max(axis=0)
        span = float(max(hi - lo)) or 1.0
        self.lo = lo - pad * span
        self.scale = SIZE / (span * (1 + 2 * pad))
        self.height = float((hi[1] - lo[1] + 2 * pad * span) * self.scale)
        self.width = float((hi[0] - lo[0] + 2 * pad * span) * self.scale)
        self.parts = []

    def xy(self, p):
        x = (p[0] - self.lo[0]) * self.scale
        y = self.height - (p[1] - self.lo[1]) * self.scale
        return f"{x:.2f}", f"{y:.2f}"

    def circle(self, p, r, fill, opacity=1.0, stroke="none"):
        x, y = self.xy(p)
        self.parts.append(
            f'<circle cx="{x}" cy="{y}" r="{max(r * self.scale, 0.3):.2f}" fill="{fill}" '
            f'fill-opacity="{opacity:.2f}" stroke="{stroke}"/>'
        )

    def polyline(self, pts, color, width=0.6, opacity=0.6):
        xy = " ".join(",".join(self.xy(p)) for p in pts)
        self.parts.append(
            f'<polyline points="{xy}" fill="none" stroke="{color}" stroke-width="{width:.2f}" '
            f'stroke-opacity="{opacity:.2f}"/>'
        )

    def text(self, x, y, s):
        self.parts.append(f'<text x="{x:.2f}" y="{y:.2f}" font-size="11" font-family="monospace">{s}</text>')

    def svg(self):
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width:.0f}" height="{self.height:.0f}" '
            f'viewBox="0 0 {self.width:.2f} {self.height:.2f}">'
        )
        return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *self.parts, "</svg>"]) + "\n"


def _boundary(canvas, domain, coords):
    for b in domain.boundary:
        canvas.circle(coords[b], domain.epsilon / 4, "#000000")


def whitney_svg(domain, records):
    """Cubes as disks of their inner radius (at least ``eps/2``), coloured by level."""
    coords = _coords(domain)
    cv = _Canvas(coords)
    _boundary(cv, domain, coords)
    for rec in records:
        color = PALETTE[rec["level"] % len(PALETTE)]
        r = max(rec["inner_radius"], domain.epsilon / 2)
        cv.circle(coords[rec["center"]], r, color, 0.55)
    levels = sorted({rec["level"] for rec in records})
    for i, k in enumerate(levels):
        cv.text(6, 14 + 13 * i, f"level {k}")
    return cv.svg()


def curves_svg(domain, curves):
    coords = _coords(domain)
    cv = _Canvas(coords)
    _boundary(cv, domain, coords)
    for i, key in enumerate(sorted(curves, key=int)):
        verts = curves[key]
        cv.polyline(coords[np.asarray(verts, dtype=np.int64)], PALETTE[i % len(PALETTE)])
    cv.circle(coords[domain.center], 2 * domain.epsilon, "#000000")
    return cv.svg()


def shadows_svg(domain, records, diameters):
    """Cubes tinted from white to red by shadow diameter."""
    coords = _coords(domain)
    cv = _Canvas(coords)
    _boundary(cv, domain, coords)
    d = np.asarray(diameters, dtype=float)
    top = float(d.max()) if len(d) and d.max() > 0 else 1.0
    for rec, v in zip(records, d):
        t = v / top
        g = int(round(255 * (1 - t)))
        r = max(rec["inner_radius"], domain.epsilon / 2)
        cv.circle(coords[rec["center"]], r, f"#ff{g:02x}{g:02x}", 0.8)
    return cv.svg()


def write_all(out, domain, decomp, curves, shadows=None):
    out = Path(out)
    records = list(decomp.iter_records())
    (out / "whitney.svg").write_text(whitney_svg(domain, records))
    (out / "curves.svg").write_text(curves_svg(domain, {k: v.vertices for k, v in curves.items()}))
    if shadows is not None:
        diam = shadows.shadow_diameters()
        (out / "shadows.json").write_text(json.dumps({"diameters": [float(x) for x in diam]}) + "\n")
        (out / "shadows.svg").write_text(shadows_svg(domain, records, diam))


def render_dir(directory, out=None):
    """Render whatever exports exist in ``directory``; returns the written paths."""
    directory = Path(directory)
    out = Path(out or directory)
    out.mkdir(parents=True, exist_ok=True)
    domain = load_domain(directory / "domain.json")
    _coords(domain)
    written = []
    wpath = directory / "whitney.jsonl"
    records = None
    if wpath.exists():
        records = [json.loads(line) for line in wpath.read_text().splitlines() if line.strip()]
        (out / "whitney.svg").write_text(whitney_svg(domain, records))
        written.append(out / "whitney.svg")
    cpath = directory / "curves.json"
    if cpath.exists():
        data = json.loads(cpath.read_text())
        curves = {k: v["vertices"] for k, v in data.items()}
        (out / "curves.svg").write_text(curves_svg(domain, curves))
        written.append(out / "curves.svg")
    spath = directory / "shadows.json"
    if spath.exists() and records is not None:
        diam = json.loads(spath.read_text())["diameters"]
        (out / "shadows.svg").write_text(shadows_svg(domain, records, diam))
        written.append(out / "shadows.svg")
    return written
