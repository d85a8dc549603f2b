"""Planar sampled domains on a uniform grid.

Each generator returns a :class:`~johnlimits.metric.DomainModel` whose
interior is the grid of step ``eps`` clipped to the open region and to
clearance ``>= eps/2``, and whose boundary is sampled separately at spacing
about ``boundary_spacing`` (default ``eps``).
"""

import math

import numpy as np

from .errors import GeometryError
from .metric import DomainModel, PointCloudSpace, parse_length

GENERATORS = ("square", "disc", "slit-disc", "cusp", "annulus", "rectangle")


def _grid(x0, x1, y0, y1, eps):
    i0, i1 = math.ceil(x0 / eps - 1e-9), math.floor(x1 / eps + 1e-9)
    j0, j1 = math.ceil(y0 / eps - 1e-9), math.floor(y1 / eps + 1e-9)
    ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
    return np.stack([ii.ravel() * eps, jj.ravel() * eps], axis=1)


def _segment(p, q, spacing, include_end=True):
    p, q = np.asarray(p, float), np.asarray(q, float)
    n = max(1, math.ceil(np.linalg.norm(q - p) / spacing - 1e-9))
    s = np.arange(n + 1 if include_end else n) / n
    return p + s[:, None] * (q - p)


def _dedupe(points, tol):
    key = np.round(points / tol).astype(np.int64)
    _, first = np.unique(key, axis=0, return_index=True)
    return points[np.sort(first)]


def _assemble(name, candidates, inside, boundary, eps, center, q=2.0, boundary_spacing=None, meta=None):
    from scipy.spatial import cKDTree

    candidates = candidates[inside(candidates)]
    d, _ = cKDTree(boundary).query(candidates)
    candidates = candidates[d >= eps / 2 * (1 - 1e-12)]
    coords = np.concatenate([candidates, boundary])
    n_int = len(candidates)
    hit = np.flatnonzero(np.all(np.isclose(candidates, center, atol=eps * 1e-6), axis=1))
    if len(hit) == 0:
        raise GeometryError("bad-parameter", f"center {center} is not an interior grid point")
    meta = dict(meta or {})
    meta.setdefault("generator", name)
    return DomainModel(
        PointCloudSpace(coords=coords),
        np.arange(n_int),
        np.arange(n_int, len(coords)),
        eps,
        int(hit[0]),
        q=q,
        boundary_spacing=boundary_spacing or eps,
        name=name,
        meta=meta,
    )


def _circle(radius, spacing, center=(0.0, 0.0)):
    m = max(8, math.ceil(2 * math.pi * radius / spacing))
    a = 2 * math.pi * np.arange(m) / m
    return np.stack([center[0] + radius * np.cos(a), center[1] + radius * np.sin(a)], axis=1)


def square(eps=1 / 128, boundary_spacing=None):
    """Unit square ``[0,1]^2`` with center ``(1/2, 1/2)``."""
    eps = parse_length(eps)
    bs = boundary_spacing or eps
    corners = [(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)]
    bnd = np.concatenate([_segment(corners[i], corners[i + 1], bs, include_end=False) for i in range(4)])
    cand = _grid(0, 1, 0, 1, eps)
    inside = lambda p: (p[:, 0] > 0) & (p[:, 0] < 1) & (p[:, 1] > 0) & (p[:, 1] < 1)
    return _assemble("square", cand, inside, bnd, eps, (0.5, 0.5), boundary_spacing=bs,
                     meta={"john": {"phi": "identity", "c": 2}})


def rectangle(eps=1 / 128, height=1 / 16, boundary_spacing=None):
    """Thin rectangle ``[0,1] x [0,height]``."""
    eps = parse_length(eps)
    height = parse_length(height)
    bs = boundary_spacing or eps
    corners = [(0, 0), (1, 0), (1, height), (0, height), (0, 0)]
    bnd = np.concatenate([_segment(corners[i], corners[i + 1], bs, include_end=False) for i in range(4)])
    cand = _grid(0, 1, 0, height, eps)
    inside = lambda p: (p[:, 0] > 0) & (p[:, 0] < 1) & (p[:, 1] > 0) & (p[:, 1] < height)
    cy = round(height / 2 / eps) * eps
    return _assemble("rectangle", cand, inside, bnd, eps, (0.5, cy), boundary_spacing=bs,
                     meta={"height": height, "john": {"phi": "identity", "c": 32}})


def disc(eps=1 / 128, boundary_spacing=None):
    """Unit disc centred at the origin."""
    eps = parse_length(eps)
    bs = boundary_spacing or eps
    bnd = _circle(1.0, bs)
    cand = _grid(-1, 1, -1, 1, eps)
    inside = lambda p: np.hypot(p[:, 0], p[:, 1]) < 1
    return _assemble("disc", cand, inside, bnd, eps, (0.0, 0.0), boundary_spacing=bs,
                     meta={"john": {"phi": "identity", "c": 2}, "uniform": True})


def slit_disc(eps=1 / 128, boundary_spacing=None):
    """Unit disc minus the radial slit ``[0,1] x {0}``; center ``(-1/2, 0)``.

    The slit tip is the origin and the slit mouth is ``(1, 0)``.
    """
    eps = parse_length(eps)
    bs = boundary_spacing or eps
    bnd = _dedupe(np.concatenate([_circle(1.0, bs), _segment((0, 0), (1, 0), bs)]), eps * 1e-3)
    cand = _grid(-1, 1, -1, 1, eps)
    inside = lambda p: (np.hypot(p[:, 0], p[:, 1]) < 1) & ~((np.abs(p[:, 1]) < 1e-12) & (p[:, 0] >= 0))
    return _assemble("slit-disc", cand, inside, bnd, eps, (-0.5, 0.0), boundary_spacing=bs,
                     meta={"john": {"phi": "identity", "c": 4}, "uniform": False})


def cusp(eps=1 / 128, s=2.0, boundary_spacing=None, K=2.0):
    """Outward cusp ``{0 < x < 1, |y| < x**s}`` with tip at the origin.

    Clearance near the tip scales like ``x**s``, so John curves need the
    gauge ``phi(t) = K t**(1/s)``; the generator records that suggestion.
    """
    eps = parse_length(eps)
    s = float(s)
    bs = boundary_spacing or eps
    # arc-length sampling of y = x**s on [0, 1]
    xs = np.linspace(0, 1, 20001)
    ys = xs**s
    arc = np.concatenate([[0], np.cumsum(np.hypot(np.diff(xs), np.diff(ys)))])
    tgt = np.arange(0, arc[-1], bs)
    xb = np.interp(tgt, arc, xs)
    upper = np.stack([xb, xb**s], axis=1)
    lower = upper[1:] * [1, -1]
    right = _segment((1, -1), (1, 1), bs)
    bnd = _dedupe(np.concatenate([upper, lower, right]), eps * 1e-3)
    cand = _grid(0, 1, -1, 1, eps)
    inside = lambda p: (p[:, 0] > 0) & (p[:, 0] < 1) & (np.abs(p[:, 1]) < p[:, 0] ** s)
    return _assemble("cusp", cand, inside, bnd, eps, (0.75, 0.0), boundary_spacing=bs,
                     meta={"s": s, "john": {"phi": "power", "K": K, "exponent": 1.0 / s, "c": 2},
                           "phi_length_john": True})


def annulus(eps=1 / 128, inner=0.5, boundary_spacing=None):
    """Annulus ``inner < |z| < 1`` with center ``(3/4, 0)`` (for inner = 1/2)."""
    eps = parse_length(eps)
    inner = parse_length(inner)
    bs = boundary_spacing or eps
    bnd = np.concatenate([_circle(1.0, bs), _circle(inner, bs)])
    cand = _grid(-1, 1, -1, 1, eps)
    r = lambda p: np.hypot(p[:, 0], p[:, 1])
    inside = lambda p: (r(p) < 1) & (r(p) > inner)
    cx = round((1 + inner) / 2 / eps) * eps
    # From the far side a curve climbs to the middle circle and then runs half way round it,
    # always within (1 - inner) / 2 of the boundary.
    half_width = (1 - inner) / 2
    c = math.ceil((half_width + math.pi * cx) / half_width) + 1
    return _assemble("annulus", cand, inside, bnd, eps, (cx, 0.0), boundary_spacing=bs,
                     meta={"john": {"phi": "identity", "c": c}, "uniform": True})


def segment(eps=1 / 256):
    """Open interval ``(0, 1)`` sampled at step ``eps``; boundary ``{0, 1}``; ``q = 1``."""
    eps = parse_length(eps)
    n = round(1 / eps)
    x = np.arange(1, n) * eps
    coords = np.concatenate([x, [0.0, 1.0]])[:, None]
    c = int(np.argmin(np.abs(x - 0.5)))
    return DomainModel(PointCloudSpace(coords=coords), np.arange(n - 1), [n - 1, n], eps, c, q=1.0,
                       boundary_dim=0.0, name="segment")


def grid_space(eps, dim=2):
    """Closed unit cube ``[0,1]^dim`` sampled at step ``eps`` as a bare space."""
    eps = parse_length(eps)
    n = round(1 / eps)
    axes = [np.arange(n + 1) * eps] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return PointCloudSpace(coords=np.stack([m.ravel() for m in mesh], axis=1))


def make_domain(name, eps=1 / 128, **params):
    """Dispatch by generator name (``square``, ``disc``, ``slit-disc``, ...)."""
    table = {
        "square": square,
        "disc": disc,
        "slit-disc": slit_disc,
        "cusp": cusp,
        "annulus": annulus,
        "rectangle": rectangle,
    }
    if name not in table:
        raise GeometryError("unknown-generator", name)
    return table[name](eps=eps, **params)
