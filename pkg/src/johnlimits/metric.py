"""Finite models of metric measure spaces, sampled domains and polyline curves.

Everything here works on integer sample ids.  A :class:`PointCloudSpace`
answers distance queries; when coordinates are available the Euclidean
metric is served through KD-trees, otherwise through an explicit table or a
callable.  Every accept/reject decision (ball membership, nearest center,
ties) goes through the same exact distance formula so that results do not
depend on which backend produced the candidates.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy import optimize, sparse
from scipy.spatial import cKDTree

from .errors import GeometryError

__all__ = [
    "PointCloudSpace",
    "DomainModel",
    "AhlforsProfile",
    "CurveModel",
    "estimate_doubling",
    "greedy_half_cover",
    "min_half_cover",
    "estimate_ahlfors",
    "dist_to_boundary",
    "reparameterize_by_arclength",
    "parse_length",
    "read_points_csv",
    "read_distance_table",
    "write_points_csv",
    "load_domain",
    "save_domain",
]

_REL = 1e-9  # candidate slack for KD-tree pre-filtering


def parse_length(value):
    """Parse ``"1/128"``, ``"0.25"`` or a number into a float."""
    if isinstance(value, str):
        return float(Fraction(value.strip()))
    return float(value)


def _euclid(a, b):
    return np.sqrt(np.sum((a - b) ** 2, axis=-1))


class PointCloudSpace:
    """A finite metric space on ids ``0 .. n-1``.

    Parameters
    ----------
    coords : array_like, optional
        ``(n, dim)`` coordinates.  Without ``table`` or ``metric`` the
        Euclidean distance on these coordinates is used.
    table : array_like, optional
        Explicit ``(n, n)`` distance table.
    metric : callable, optional
        ``metric(i, j) -> float`` on ids.
    n : int, optional
        Number of points; required only when neither coords nor table is given.
    """

    def __init__(self, coords=None, table=None, metric=None, n=None):
        if coords is not None:
            coords = np.asarray(coords, dtype=float)
            if coords.ndim == 1:
                coords = coords[:, None]
            coords.setflags(write=False)
        if table is not None:
            table = np.asarray(table, dtype=float)
            if table.ndim != 2 or table.shape[0] != table.shape[1]:
                raise GeometryError("bad-table", "distance table must be square")
            table.setflags(write=False)
        if n is None:
            if coords is not None:
                n = len(coords)
            elif table is not None:
                n = len(table)
            else:
                raise GeometryError("bad-parameter", "cannot infer number of points")
        self.n = int(n)
        self.coords = coords
        self.table = table
        self.metric = metric
        if table is not None:
            self.kind = "table"
        elif metric is not None:
            self.kind = "callable"
        elif coords is not None:
            self.kind = "euclidean"
        else:
            raise GeometryError("bad-parameter", "no metric supplied")
        self._indexes = {}

    def __len__(self):
        return self.n

    @property
    def ids(self):
        return np.arange(self.n)

    # -- raw distances -------------------------------------------------

    def dist(self, i, j):
        if self.kind == "euclidean":
            return float(_euclid(self.coords[i], self.coords[j]))
        if self.kind == "table":
            return float(self.table[i, j])
        return float(self.metric(int(i), int(j)))

    def dist_to(self, i, ids):
        """Distances from ``i`` to every id in ``ids``."""
        ids = np.asarray(ids, dtype=np.int64)
        if self.kind == "euclidean":
            return _euclid(self.coords[ids], self.coords[i])
        if self.kind == "table":
            return self.table[i, ids].copy()
        return np.array([self.metric(int(i), int(j)) for j in ids], dtype=float)

    def cross(self, a, b):
        """Distance matrix between id arrays ``a`` and ``b``."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.kind == "euclidean":
            return _euclid(self.coords[a][:, None, :], self.coords[b][None, :, :])
        if self.kind == "table":
            return self.table[np.ix_(a, b)].copy()
        return np.array([[self.metric(int(i), int(j)) for j in b] for i in a], dtype=float)

    def pair_dist(self, a, b):
        """Elementwise distances ``d(a[i], b[i])``."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.kind == "euclidean":
            return _euclid(self.coords[a], self.coords[b])
        if self.kind == "table":
            return self.table[a, b].copy()
        return np.array([self.metric(int(i), int(j)) for i, j in zip(a, b)], dtype=float)

    def diameter_bound(self):
        """An upper bound for the diameter (exact for table/callable)."""
        if self.n <= 1:
            return 0.0
        if self.kind == "euclidean":
            span = self.coords.max(axis=0) - self.coords.min(axis=0)
            return float(np.sqrt(np.sum(span**2)))
        if self.kind == "table":
            return float(self.table.max())
        return float(self.cross(self.ids, self.ids).max())

    def min_spacing(self):
        """Smallest positive distance between two distinct samples."""
        if self.n <= 1:
            return math.inf
        if self.kind == "euclidean":
            d, _ = cKDTree(self.coords).query(self.coords, k=2)
            return float(d[:, 1].min())
        m = self.cross(self.ids, self.ids)
        np.fill_diagonal(m, np.inf)
        return float(m.min())

    def index(self, ids=None):
        """Query structure over a subset of ids (cached per subset)."""
        ids = self.ids if ids is None else np.asarray(ids, dtype=np.int64)
        key = (len(ids), int(ids[:1].sum()) if len(ids) else -1, hash(ids.tobytes()))
        idx = self._indexes.get(key)
        if idx is None or not np.array_equal(idx.ids, ids):
            idx = SubsetIndex(self, ids)
            self._indexes[key] = idx
        return idx

    def check_metric(self, triples=10_000, seed=0):
        """Spot-check metric axioms on random triples; returns a violation list."""
        rng = np.random.default_rng(seed)
        if self.n == 0:
            return []
        i, j, k = rng.integers(0, self.n, size=(3, triples))
        dij = self.pair_dist(i, j)
        dji = self.pair_dist(j, i)
        djk = self.pair_dist(j, k)
        dik = self.pair_dist(i, k)
        dii = self.pair_dist(i, i)
        out = []
        tol = 1e-12 * max(1.0, float(np.nanmax(dik)) if len(dik) else 1.0)
        if np.any(~np.isfinite(dij)) or np.any(dij < 0):
            out.append("nonnegative-finite")
        if np.any(dii != 0):
            out.append("identity")
        if np.any(np.abs(dij - dji) > tol):
            out.append("symmetry")
        if np.any(dik > dij + djk + tol):
            out.append("triangle")
        return out


class SubsetIndex:
    """Ball and nearest-neighbour queries restricted to ``ids``.

    Positions returned by the query methods index into ``ids``; the order of
    ``ids`` is the tie-breaking order (lowest position wins).
    """

    def __init__(self, space, ids):
        self.space = space
        self.ids = np.asarray(ids, dtype=np.int64)
        self._tree = None
        if space.kind == "euclidean" and len(self.ids):
            self._tree = cKDTree(space.coords[self.ids])

    def __len__(self):
        return len(self.ids)

    def _point(self, pid):
        return self.space.coords[pid]

    def ball(self, pid, r, closed=False):
        """Positions of subset members within ``r`` of sample ``pid``."""
        if len(self.ids) == 0 or r <= 0 and not closed:
            return np.empty(0, dtype=np.int64)
        if self._tree is not None:
            cand = np.asarray(
                self._tree.query_ball_point(self._point(pid), r * (1 + _REL) + 1e-300),
                dtype=np.int64,
            )
            cand.sort()
        else:
            cand = np.arange(len(self.ids))
        if len(cand) == 0:
            return cand
        d = self.space.dist_to(pid, self.ids[cand])
        keep = d <= r if closed else d < r
        return cand[keep]

    def balls(self, pids, radii, closed=False):
        """List of position arrays, one ball per query id."""
        radii = np.broadcast_to(np.asarray(radii, dtype=float), (len(pids),))
        if self._tree is None or len(pids) == 0:
            return [self.ball(p, r, closed) for p, r in zip(pids, radii)]
        pts = self.space.coords[np.asarray(pids, dtype=np.int64)]
        cands = self._tree.query_ball_point(pts, radii * (1 + _REL) + 1e-300)
        out = []
        for p, r, c in zip(pids, radii, cands):
            c = np.asarray(c, dtype=np.int64)
            c.sort()
            if len(c):
                d = self.space.dist_to(p, self.ids[c])
                c = c[(d <= r) if closed else (d < r)]
            out.append(c)
        return out

    def count_within(self, pids, r, closed=False):
        return np.array([len(b) for b in self.balls(pids, r, closed)], dtype=np.int64)

    def nearest(self, pids):
        """Nearest subset position for each query id, ties to lowest position.

        Returns ``(positions, distances)``.
        """
        pids = np.asarray(pids, dtype=np.int64)
        m = len(self.ids)
        if m == 0:
            raise GeometryError("empty-space")
        if self._tree is None:
            pos = np.empty(len(pids), dtype=np.int64)
            dist = np.empty(len(pids))
            for n, p in enumerate(pids):
                d = self.space.dist_to(p, self.ids)
                j = int(np.argmin(d))
                pos[n], dist[n] = j, d[j]
            return pos, dist
        k = min(8, m)
        _, cand = self._tree.query(self.space.coords[pids], k=k)
        cand = np.asarray(cand, dtype=np.int64).reshape(len(pids), k)
        exact = _euclid(self.space.coords[self.ids[cand]], self.space.coords[pids][:, None, :])
        best = exact.min(axis=1)
        pos = np.empty(len(pids), dtype=np.int64)
        for n in range(len(pids)):
            tied = cand[n][exact[n] == best[n]]
            if k < m and exact[n].max() == best[n]:
                tied = self.ball(pids[n], best[n], closed=True)
            pos[n] = tied.min()
        return pos, best

    def pairs(self, r, closed=False):
        """All position pairs ``(i, j)``, ``i < j``, at distance < r (<= if closed)."""
        m = len(self.ids)
        if m < 2:
            return np.empty((0, 2), dtype=np.int64)
        if self._tree is not None:
            pr = self._tree.query_pairs(r * (1 + _REL), output_type="ndarray").astype(np.int64)
            if len(pr) == 0:
                return pr
            pr.sort(axis=1)
            d = self.space.pair_dist(self.ids[pr[:, 0]], self.ids[pr[:, 1]])
            pr = pr[(d <= r) if closed else (d < r)]
            order = np.lexsort((pr[:, 1], pr[:, 0]))
            return pr[order]
        d = self.space.cross(self.ids, self.ids)
        i, j = np.triu_indices(m, k=1)
        dd = d[i, j]
        keep = (dd <= r) if closed else (dd < r)
        return np.stack([i[keep], j[keep]], axis=1)


@dataclass(frozen=True)
class AhlforsProfile:
    """Fitted exponent ``q`` and the two-sided constant ``C_q``."""

    q: float
    C_q: float
    radius_range: tuple
    n_balls: int

    def bounds_hold(self, r, measure):
        lo = r**self.q / self.C_q
        hi = self.C_q * r**self.q
        return lo * (1 - 1e-12) <= measure <= hi * (1 + 1e-12)


@dataclass(frozen=True)
class CurveModel:
    """Polyline through sample ids with parameter and cumulative arc length."""

    vertices: np.ndarray
    t: np.ndarray
    arclen: np.ndarray

    @classmethod
    def from_vertices(cls, space, vertices, t=None):
        v = np.asarray(vertices, dtype=np.int64)
        if len(v) == 0:
            raise GeometryError("degenerate-curve", "no vertices")
        steps = space.pair_dist(v[:-1], v[1:]) if len(v) > 1 else np.empty(0)
        arclen = np.concatenate([[0.0], np.cumsum(steps)])
        if t is None:
            total = arclen[-1]
            t = arclen / total if total > 0 else np.linspace(0.0, 1.0, len(v))
        t = np.asarray(t, dtype=float)
        if len(t) != len(v):
            raise GeometryError("bad-parameter", "t and vertices differ in length")
        for arr in (v, t, arclen):
            arr.setflags(write=False)
        return cls(v, t, arclen)

    @property
    def length(self):
        return float(self.arclen[-1])

    @property
    def start(self):
        return int(self.vertices[0])

    @property
    def end(self):
        return int(self.vertices[-1])

    def steps(self):
        return np.diff(self.arclen)

    def to_dict(self):
        return {
            "vertices": [int(x) for x in self.vertices],
            "t": [float(x) for x in self.t],
            "arclen": [float(x) for x in self.arclen],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            np.asarray(data["vertices"], dtype=np.int64),
            np.asarray(data["t"], dtype=float),
            np.asarray(data["arclen"], dtype=float),
        )


def reparameterize_by_arclength(curve):
    """Return ``curve`` with ``t`` proportional to cumulative length."""
    if len(curve.vertices) < 2 or curve.length <= 0:
        raise GeometryError("degenerate-curve")
    t = curve.arclen / curve.length
    t.setflags(write=False)
    return CurveModel(curve.vertices, t, curve.arclen)


class DomainModel:
    """A bounded domain sampled at resolution ``epsilon``.

    The measure on the domain is counting measure times ``epsilon**q``;
    boundary samples carry ``boundary_spacing**boundary_dim`` each.
    Interior ids are kept sorted; graph nodes and cached arrays are indexed
    by position in ``interior``.
    """

    def __init__(
        self,
        space,
        interior,
        boundary,
        epsilon,
        center,
        q=2.0,
        boundary_spacing=None,
        boundary_dim=1.0,
        neighbor_radius=None,
        name="domain",
        meta=None,
    ):
        self.space = space
        self.interior = np.unique(np.asarray(interior, dtype=np.int64))
        self.boundary = np.asarray(boundary, dtype=np.int64)
        self.epsilon = float(epsilon)
        self.center = int(center)
        self.q = float(q)
        self.boundary_spacing = float(boundary_spacing if boundary_spacing is not None else epsilon)
        self.boundary_dim = float(boundary_dim)
        self.neighbor_radius = float(neighbor_radius if neighbor_radius is not None else 1.5 * epsilon)
        self.name = name
        self.meta = dict(meta or {})
        if len(self.boundary) == 0:
            raise GeometryError("improper-domain", "no boundary samples")
        if len(self.interior) == 0:
            raise GeometryError("empty-space", "no interior samples")
        pos = np.full(space.n, -1, dtype=np.int64)
        pos[self.interior] = np.arange(len(self.interior))
        self._pos = pos
        if pos[self.center] < 0:
            raise GeometryError("not-interior", "center must be an interior sample")
        self._pos.setflags(write=False)
        self.interior.setflags(write=False)
        self.boundary.setflags(write=False)

    # -- lookups --------------------------------------------------------

    def position(self, ids):
        """Interior positions of ids (``-1`` for non-interior)."""
        return self._pos[np.asarray(ids, dtype=np.int64)]

    def is_interior(self, pid):
        return 0 <= pid < self.space.n and self._pos[pid] >= 0

    @cached_property
    def interior_index(self):
        return self.space.index(self.interior)

    @cached_property
    def boundary_index(self):
        return self.space.index(self.boundary)

    @cached_property
    def clearance(self):
        """Distance to the boundary samples per interior position."""
        _, d = self.boundary_index.nearest(self.interior)
        d = np.asarray(d, dtype=float)
        d.setflags(write=False)
        return d

    def clearance_of(self, ids):
        """``d(x, boundary)`` for arbitrary ids; boundary samples give 0."""
        ids = np.asarray(ids, dtype=np.int64)
        p = self._pos[ids]
        out = np.zeros(len(ids))
        inside = p >= 0
        out[inside] = self.clearance[p[inside]]
        other = ~inside
        if np.any(other):
            on_b = np.isin(ids[other], self.boundary)
            rest = ids[other][~on_b]
            vals = np.zeros(int(other.sum()))
            if len(rest):
                _, d = self.boundary_index.nearest(rest)
                vals[~on_b] = d
            out[other] = vals
        return out

    @property
    def cell_measure(self):
        return self.epsilon**self.q

    @property
    def boundary_cell_measure(self):
        return self.boundary_spacing**self.boundary_dim

    @cached_property
    def graph(self):
        """Symmetric CSR neighbour graph on interior positions, weights = distances."""
        pr = self.interior_index.pairs(self.neighbor_radius, closed=True)
        w = self.space.pair_dist(self.interior[pr[:, 0]], self.interior[pr[:, 1]])
        m = len(self.interior)
        rows = np.concatenate([pr[:, 0], pr[:, 1]])
        cols = np.concatenate([pr[:, 1], pr[:, 0]])
        g = sparse.csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(m, m))
        g.sort_indices()
        return g

    def access(self, pid):
        """Entry vertices for a sample: itself if interior, else nearest interior samples.

        Returns ``(positions, distances)``; ties are all kept.
        """
        p = self._pos[pid]
        if p >= 0:
            return np.array([p]), np.array([0.0])
        pos, d = self.interior_index.nearest([pid])
        tied = self.interior_index.ball(pid, float(d[0]), closed=True)
        dist = self.space.dist_to(pid, self.interior[tied])
        return tied, dist

    def validate(self):
        """Return a list of violated domain invariants (empty when sound)."""
        out = []
        if np.any(self.clearance < self.epsilon / 2 * (1 - 1e-12)):
            out.append("interior-clearance")
        if np.any(self._pos[self.boundary] >= 0):
            out.append("boundary-interior-overlap")
        return out

    @cached_property
    def diameter(self):
        return self.space.diameter_bound()

    # -- serialization ---------------------------------------------------

    def to_dict(self, points_file="points.csv"):
        d = {
            "name": self.name,
            "points": points_file,
            "interior": [int(x) for x in self.interior],
            "boundary": [int(x) for x in self.boundary],
            "center": self.center,
            "epsilon": self.meta.get("epsilon_text", repr(self.epsilon)),
            "q": self.q,
            "boundary_spacing": self.boundary_spacing,
            "boundary_dim": self.boundary_dim,
            "neighbor_radius": self.neighbor_radius,
        }
        meta = {k: v for k, v in self.meta.items() if k != "epsilon_text"}
        if meta:
            d["meta"] = meta
        return d


def dist_to_boundary(domain, x):
    """Distance from interior sample ``x`` to the boundary samples (cached)."""
    if not domain.is_interior(int(x)):
        raise GeometryError("not-interior", f"sample {x}")
    return float(domain.clearance[domain.position([x])[0]])


def greedy_half_cover(space, x, r, among=None):
    """Greedy cover of ``B(x, r)`` by open balls of radius ``r/2`` centred at samples.

    At each step the sample covering the most still-uncovered points of the
    ball is chosen (ties to the lowest id).  Returns the chosen center ids.
    """
    idx = space.index(among)
    ball = idx.ids[idx.ball(x, r)]
    if len(ball) == 0:
        return np.empty(0, dtype=np.int64)
    cover = space.cross(ball, ball) < r / 2
    uncovered = np.ones(len(ball), dtype=bool)
    centers = []
    while uncovered.any():
        gains = cover[:, uncovered].sum(axis=1)
        j = int(np.argmax(gains))
        centers.append(int(ball[j]))
        uncovered &= ~cover[j]
    return np.asarray(centers, dtype=np.int64)


def min_half_cover(space, x, r, among=None, max_candidates=400):
    """Smallest cover of ``B(x, r)`` by open ``r/2`` balls found by integer programming.

    Candidate centers are the ball's samples, thinned to an ``r/12``-net when
    there are more than ``max_candidates``.  The set-cover program is solved
    with HiGHS; the greedy cover is returned when it is not beaten.
    """
    greedy = greedy_half_cover(space, x, r, among)
    if len(greedy) <= 2:
        return greedy
    idx = space.index(among)
    ball = idx.ids[idx.ball(x, r)]
    cand = ball
    if len(ball) > max_candidates:
        sub = space.index(ball)
        blocked = np.zeros(len(ball), dtype=bool)
        keep = []
        for p in range(len(ball)):
            if not blocked[p]:
                keep.append(p)
                blocked[sub.ball(ball[p], r / 12)] = True
        cand = ball[keep]
    cover = space.cross(cand, ball) < r / 2
    patterns = np.unique(cover.T, axis=0)
    res = optimize.milp(
        np.ones(len(cand)),
        constraints=optimize.LinearConstraint(sparse.csr_matrix(patterns.astype(float)), lb=1),
        integrality=np.ones(len(cand)),
        bounds=optimize.Bounds(0, 1),
    )
    if res.x is None:
        return greedy
    chosen = cand[res.x > 0.5]
    if len(chosen) >= len(greedy) or not cover[res.x > 0.5].any(axis=0).all():
        return greedy
    return np.sort(chosen)


def estimate_doubling(space, trials=64, seed=0, radii=None, exhaustive=False, method="exact"):
    """Empirical doubling constant: the largest half-radius cover over the trials.

    ``radii`` defaults to dyadic radii between the sample spacing and the
    diameter.  With ``exhaustive=True`` every (sample, radius) pair is tried.
    ``method`` is ``"exact"`` (integer-programming cover, see
    :func:`min_half_cover`) or ``"greedy"`` (faster, may overcount).
    """
    if space.n == 0:
        raise GeometryError("empty-space")
    if space.n == 1:
        return 1
    if method not in ("exact", "greedy"):
        raise GeometryError("bad-parameter", f"method {method!r}")
    cover = min_half_cover if method == "exact" else greedy_half_cover
    if radii is None:
        lo = space.min_spacing()
        hi = space.diameter_bound()
        j0 = math.floor(math.log2(hi))
        j1 = math.ceil(math.log2(lo))
        radii = [2.0**j for j in range(j0, j1 - 1, -1)]
    radii = np.asarray(radii, dtype=float)
    if exhaustive:
        trial_pairs = [(x, r) for r in radii for x in range(space.n)]
    else:
        rng = np.random.default_rng(seed)
        xs = rng.integers(0, space.n, size=trials)
        rs = rng.choice(radii, size=trials)
        trial_pairs = list(zip(xs, rs))
    best = 1
    for x, r in trial_pairs:
        best = max(best, len(cover(space, int(x), float(r))))
    return int(best)


def estimate_ahlfors(domain, radii, n_centers=64, seed=0, q=None):
    """Fit ``q`` from ball measures and return the minimal two-sided constant.

    Passing ``q`` skips the fit and returns the constant for that exponent.
    """
    radii = np.unique(np.asarray(radii, dtype=float))
    if len(radii) < 2:
        raise GeometryError("need ≥ 2 radii")
    if radii.min() < 4 * domain.epsilon * (1 - 1e-12):
        raise GeometryError("sub-resolution", f"radius {radii.min()} < 4*epsilon")
    if radii.max() > domain.diameter:
        raise GeometryError("sub-resolution", "radius exceeds diameter")
    rng = np.random.default_rng(seed)
    centers = domain.interior[rng.integers(0, len(domain.interior), size=n_centers)]
    idx = domain.interior_index
    rs, nus = [], []
    for r in radii:
        counts = idx.count_within(centers, r)
        rs.append(np.full(len(centers), r))
        nus.append(counts * domain.cell_measure)
    rs = np.concatenate(rs)
    nus = np.concatenate(nus)
    if q is None:
        q, _ = np.polyfit(np.log(rs), np.log(nus), 1)
    ratio = nus / rs**q
    C_q = float(max(ratio.max(), (1.0 / ratio).max(), 1.0))
    return AhlforsProfile(float(q), C_q, (float(radii.min()), float(radii.max())), len(rs))


# -- file formats -----------------------------------------------------------


def read_points_csv(path):
    """Read ``id,x,y[,z]`` into a Euclidean :class:`PointCloudSpace`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [r for r in reader if r]
    if header[0] != "id":
        raise GeometryError("bad-file", "first column must be 'id'")
    ids = np.array([int(r[0]) for r in rows], dtype=np.int64)
    if not np.array_equal(np.sort(ids), np.arange(len(ids))):
        raise GeometryError("bad-file", "ids must be dense 0..n-1")
    coords = np.zeros((len(ids), len(header) - 1))
    coords[ids] = np.array([[float(v) for v in r[1:]] for r in rows])
    return PointCloudSpace(coords=coords)


def read_distance_table(ids_path, table_path):
    """Read an ``id``-only CSV plus a square numeric distance table."""
    with open(ids_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        ids = [int(r[0]) for r in reader if r]
    if header[0].strip() != "id":
        raise GeometryError("bad-file", "first column must be 'id'")
    table = np.loadtxt(table_path, delimiter="," if str(table_path).endswith(".csv") else None, ndmin=2)
    if table.shape != (len(ids), len(ids)):
        raise GeometryError("bad-table", "table size does not match id list")
    order = np.argsort(ids)
    return PointCloudSpace(table=table[np.ix_(order, order)])


def write_points_csv(space, path):
    if space.coords is None:
        raise GeometryError("no-coordinates")
    dim = space.coords.shape[1]
    names = ["x", "y", "z"][:dim] if dim <= 3 else [f"x{i}" for i in range(dim)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *names])
        for i, row in enumerate(space.coords):
            w.writerow([i, *(repr(float(v)) for v in row)])


def save_domain(domain, directory, stem="domain"):
    """Write ``<stem>.json`` and ``<stem>_points.csv`` into ``directory``."""
    os.makedirs(directory, exist_ok=True)
    pts = f"{stem}_points.csv"
    write_points_csv(domain.space, os.path.join(directory, pts))
    path = os.path.join(directory, f"{stem}.json")
    with open(path, "w") as fh:
        json.dump(domain.to_dict(points_file=pts), fh, sort_keys=True, indent=1)
        fh.write("\n")
    return path


def load_domain(path):
    with open(path) as fh:
        d = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    space = read_points_csv(os.path.join(base, d["points"]))
    meta = dict(d.get("meta", {}))
    if isinstance(d["epsilon"], str):
        meta["epsilon_text"] = d["epsilon"]
    return DomainModel(
        space,
        d["interior"],
        d["boundary"],
        parse_length(d["epsilon"]),
        d["center"],
        q=d.get("q", 2.0),
        boundary_spacing=d.get("boundary_spacing"),
        boundary_dim=d.get("boundary_dim", 1.0),
        neighbor_radius=d.get("neighbor_radius"),
        name=d.get("name", "domain"),
        meta=meta,
    )
