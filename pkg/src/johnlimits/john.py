"""phi-length John curves, quasihyperbolic distance and uniformity checks.

Curves run from a boundary (or interior) sample ``x = gamma(0)`` to the
domain center ``x0 = gamma(1)``; the running length is measured from
``gamma(0)``.  A curve is admissible when at every vertex

    phi(c * d(gamma(t), boundary)) >= length(gamma[0, t]) - 2 eps.

Because the constraint only limits the length travelled so far, a shorter
prefix to a vertex dominates every longer one.  The constrained search
therefore reduces to Dijkstra's algorithm in which a vertex may only be
labelled with a length that satisfies its own bound, and the result is the
shortest admissible path.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.interpolate import PchipInterpolator
from scipy.sparse import csgraph, csr_matrix

from .errors import GeometryError
from .metric import CurveModel

__all__ = [
    "JohnProfile",
    "JohnCertificate",
    "QuasihyperbolicResult",
    "UniformReport",
    "verify_john_curve",
    "construct_john_curve",
    "construct_john_curves",
    "quasihyperbolic_distance",
    "quasihyperbolic_from",
    "fit_quasihyperbolic_constant",
    "check_uniform",
    "bounded_search",
]


class JohnProfile:
    """Gauge ``phi`` and constant ``c`` of a phi-length John condition.

    ``kind`` is ``"identity"``, ``"power"`` (``K * t**exponent``) or
    ``"table"`` (monotone cubic interpolation through ``(0, 0)`` and the
    given nodes, continued with slope 1 past the last node).
    """

    def __init__(self, kind="identity", c=1.0, K=1.0, exponent=1.0, table=None):
        if c < 1:
            raise GeometryError("bad-parameter", "John constant c must be >= 1")
        self.kind = kind
        self.c = float(c)
        self.K = float(K)
        self.exponent = float(exponent)
        self._interp = None
        self.table = None
        if kind == "table":
            ts, vals = (np.asarray(a, dtype=float) for a in table)
            if ts[0] > 0:
                ts = np.concatenate([[0.0], ts])
                vals = np.concatenate([[0.0], vals])
            if np.any(np.diff(ts) <= 0) or np.any(np.diff(vals) < 0):
                raise GeometryError("bad-parameter", "gauge table must be increasing")
            self.table = (ts, vals)
            self._interp = PchipInterpolator(ts, vals, extrapolate=False)
        elif kind == "power":
            if not 0 < self.exponent <= 1 or self.K <= 0:
                raise GeometryError("bad-parameter", "power gauge needs K > 0 and 0 < exponent <= 1")
        elif kind != "identity":
            raise GeometryError("bad-parameter", f"unknown gauge kind {kind!r}")

    @classmethod
    def identity(cls, c=1.0):
        return cls("identity", c)

    @classmethod
    def power(cls, K, exponent, c=1.0):
        return cls("power", c, K=K, exponent=exponent)

    @classmethod
    def from_table(cls, ts, values, c=1.0):
        return cls("table", c, table=(ts, values))

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("phi", d.pop("kind", "identity"))
        if kind == "table":
            return cls.from_table(d["ts"], d["values"], d.get("c", 1.0))
        return cls(kind, d.get("c", 1.0), K=d.get("K", 1.0), exponent=d.get("exponent", 1.0))

    def with_c(self, c):
        out = JohnProfile.__new__(JohnProfile)
        out.__dict__.update(self.__dict__)
        if c < 1:
            raise GeometryError("bad-parameter", "John constant c must be >= 1")
        out.c = float(c)
        return out

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "identity":
            return t.copy() if t.ndim else float(t)
        if self.kind == "power":
            out = self.K * np.power(np.maximum(t, 0.0), self.exponent)
            return out if t.ndim else float(out)
        ts, vals = self.table
        inside = np.clip(t, 0.0, ts[-1])
        out = np.where(t <= ts[-1], self._interp(inside), vals[-1] + (t - ts[-1]))
        return out if t.ndim else float(out)

    def validate(self, grid=None):
        """Violations of ``phi(0) = 0``, monotonicity and ``phi(t) >= t`` on ``grid``."""
        grid = np.geomspace(1e-6, 2.0, 400) if grid is None else np.asarray(grid, dtype=float)
        v = self(grid)
        out = []
        if abs(float(self(0.0))) > 0:
            out.append("phi(0) != 0")
        if np.any(np.diff(v) < 0):
            out.append("phi not increasing")
        if np.any(v < grid * (1 - 1e-12)):
            out.append("phi(t) < t")
        return out

    @property
    def label(self):
        if self.kind == "identity":
            return "t"
        if self.kind == "power":
            return f"{self.K:g}*t^{self.exponent:g}"
        return "table"

    def to_dict(self):
        d = {"phi": self.kind, "c": self.c}
        if self.kind == "power":
            d.update(K=self.K, exponent=self.exponent)
        if self.kind == "table":
            d.update(ts=[float(x) for x in self.table[0]], values=[float(x) for x in self.table[1]])
        return d

    def __repr__(self):
        return f"JohnProfile(phi={self.label}, c={self.c:g})"


@dataclass(frozen=True)
class JohnCertificate:
    curve: CurveModel
    margin: float
    passed: bool
    worst_vertex: int
    slack: float

    def to_dict(self):
        return {
            "margin": self.margin,
            "passed": self.passed,
            "worst_vertex": self.worst_vertex,
            "slack": self.slack,
            "length": self.curve.length,
            "n_vertices": int(len(self.curve.vertices)),
        }


@dataclass(frozen=True)
class QuasihyperbolicResult:
    value: float
    path: np.ndarray


@dataclass
class UniformReport:
    c: float
    pass_fraction: float
    pairs: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)

    def to_dict(self):
        return {"c": self.c, "pass_fraction": self.pass_fraction, "pairs": self.pairs, "witnesses": self.witnesses}


def verify_john_curve(domain, curve, profile):
    """Evaluate the John inequality at every vertex and return the worst margin."""
    if curve.end != domain.center:
        raise GeometryError("not-anchored", f"curve ends at {curve.end}, center is {domain.center}")
    d = domain.clearance_of(curve.vertices)
    margins = np.asarray(profile(profile.c * d)) - curve.arclen
    j = int(np.argmin(margins))
    slack = 2 * domain.epsilon
    return JohnCertificate(curve, float(margins[j]), bool(margins[j] >= -slack), j, slack)


# -- constrained search ---------------------------------------------------------


@njit(cache=True)
def _bounded_dijkstra(indptr, indices, weights, sources, source_dist, bound, target):
    n = len(indptr) - 1
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=np.bool_)
    heap = [(0.0, np.int64(0))]
    heap.pop()
    for i in range(len(sources)):
        s = sources[i]
        d = source_dist[i]
        if d <= bound[s] and d < dist[s]:
            dist[s] = d
            heapq.heappush(heap, (d, s))
    while len(heap) > 0:
        d, u = heapq.heappop(heap)
        if done[u] or d > dist[u]:
            continue
        done[u] = True
        if u == target:
            break
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            nd = d + weights[e]
            if nd < dist[v] and nd <= bound[v]:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, pred


def _csr_arrays(domain):
    cache = domain.__dict__.setdefault("_john_cache", {})
    arrs = cache.get("csr")
    if arrs is None:
        g = domain.graph
        arrs = (g.indptr.astype(np.int64), g.indices.astype(np.int64), g.data.astype(np.float64))
        cache["csr"] = arrs
    return arrs


def bounded_search(domain, sources, source_dist, bound, target=-1):
    """Shortest path lengths from ``sources`` where each label must not exceed ``bound``.

    Positions index the interior samples.  Returns ``(dist, pred)``; the
    search stops once ``target`` is settled (``-1`` explores everything).
    """
    indptr, indices, weights = _csr_arrays(domain)
    return _bounded_dijkstra(
        indptr,
        indices,
        weights,
        np.asarray(sources, dtype=np.int64),
        np.asarray(source_dist, dtype=np.float64),
        np.asarray(bound, dtype=np.float64),
        np.int64(target),
    )


def _walk_back(pred, p):
    path = [p]
    while pred[path[-1]] >= 0:
        path.append(int(pred[path[-1]]))
    return path[::-1]


def john_bounds(domain, profile):
    """Per interior position: largest admissible running length at that vertex."""
    return np.asarray(profile(profile.c * domain.clearance)) + 2 * domain.epsilon


def construct_john_curve(domain, xi, profile, allowed=None):
    """Shortest admissible curve from sample ``xi`` to the center.

    ``allowed`` optionally restricts the search to a boolean mask over
    interior positions.  The start ``xi`` enters the interior graph through
    its nearest interior samples.
    """
    xi = int(xi)
    bound = john_bounds(domain, profile)
    if allowed is not None:
        bound = np.where(allowed, bound, -np.inf)
    src, sd = domain.access(xi)
    target = int(domain.position([domain.center])[0])
    dist, pred = bounded_search(domain, src, sd, bound, target)
    if not np.isfinite(dist[target]):
        raise GeometryError("no-john-curve", f"no admissible path from {xi} for {profile!r}")
    path = domain.interior[_walk_back(pred, target)]
    if not domain.is_interior(xi):
        path = np.concatenate([[xi], path])
    return CurveModel.from_vertices(domain.space, path)


def construct_john_curves(domain, xis, profile, allowed=None):
    """Curves for many starts; returns ``(curves, failures)`` keyed by sample id."""
    curves, failures = {}, []
    for xi in xis:
        try:
            curves[int(xi)] = construct_john_curve(domain, xi, profile, allowed)
        except GeometryError:
            failures.append(int(xi))
    return curves, failures


# -- quasihyperbolic distance ------------------------------------------------------


def _qh_graph(domain):
    cache = domain.__dict__.setdefault("_john_cache", {})
    g = cache.get("qh")
    if g is None:
        base = domain.graph.tocoo()
        clr = domain.clearance
        w = base.data / np.minimum(clr[base.row], clr[base.col])
        g = csr_matrix((w, (base.row, base.col)), shape=base.shape)
        cache["qh"] = g
    return g


def _interior_pos(domain, x):
    p = domain.position([x])[0] if 0 <= int(x) < domain.space.n else -1
    if p < 0:
        raise GeometryError("not-interior", f"sample {x}")
    return int(p)


def quasihyperbolic_from(domain, x):
    """Graph quasihyperbolic distance from ``x`` to every interior position."""
    p = _interior_pos(domain, x)
    return csgraph.dijkstra(_qh_graph(domain), indices=p)


def quasihyperbolic_distance(domain, x, y):
    """Shortest path with edge weight ``d(u, v) / min(d_b(u), d_b(v))``."""
    px, py = _interior_pos(domain, x), _interior_pos(domain, y)
    if px == py:
        return QuasihyperbolicResult(0.0, np.array([int(x)]))
    dist, pred = csgraph.dijkstra(_qh_graph(domain), indices=px, return_predecessors=True)
    if not np.isfinite(dist[py]):
        raise GeometryError("no-path", f"{x} and {y} are disconnected")
    path = [py]
    while path[-1] != px:
        path.append(int(pred[path[-1]]))
    return QuasihyperbolicResult(float(dist[py]), domain.interior[np.asarray(path[::-1])])


def _qh_rhs(C, ratio):
    return C * np.maximum(0.0, np.log(C * ratio)) + 2


def fit_quasihyperbolic_constant(k_values, ratios, hi=1e6):
    """Smallest ``C >= 1`` with ``k <= C log+(C * ratio) + 2`` for every pair.

    ``ratio`` is ``d(x, y) / min(d_b(x), d_b(y))``.  The right side grows
    with ``C`` so bisection on ``[1, hi]`` finds the threshold.
    """
    k = np.asarray(k_values, dtype=float)
    r = np.asarray(ratios, dtype=float)
    ok = lambda C: bool(np.all(k <= _qh_rhs(C, r)))
    if ok(1.0):
        return 1.0
    if not ok(hi):
        return math.inf
    lo = 1.0
    for _ in range(80):
        mid = math.sqrt(lo * hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


# -- uniformity ------------------------------------------------------------------------


def _cigar_length(domain, p1, p2, c, slack):
    """Length of the shortest sampled cigar curve between two positions."""
    if p1 == p2:
        return 0.0
    bound = c * domain.clearance + slack
    d1, _ = bounded_search(domain, [p1], [0.0], bound)
    d2, _ = bounded_search(domain, [p2], [0.0], bound)
    g = domain.graph.tocoo()
    tot = d1[g.row] + g.data + d2[g.col]
    best = float(tot.min()) if len(tot) else math.inf
    # a vertex reachable from both sides within its bound splits the curve at itself
    return min(best, float(np.min(d1 + d2)))


def check_uniform(domain, c, pairs, slack=None):
    """Search each pair for a curve obeying both the length and cigar conditions.

    A sampled curve passes when ``length <= c d(x1, x2) + slack`` and every
    vertex has ``min(len to x1, len to x2) <= c d_b(x) + slack`` with slack
    ``2 eps`` by default.  The report lists each pair and the failing ones
    as witnesses, worst first.
    """
    slack = 2 * domain.epsilon if slack is None else float(slack)
    rows = []
    for x1, x2 in pairs:
        p1, p2 = _interior_pos(domain, x1), _interior_pos(domain, x2)
        d = float(domain.space.dist(int(x1), int(x2)))
        L = _cigar_length(domain, p1, p2, c, slack)
        passed = bool(L <= c * d + slack)
        rows.append(
            {
                "x1": int(x1),
                "x2": int(x2),
                "distance": d,
                "cigar_length": L if math.isfinite(L) else None,
                "ratio": (L / d if d > 0 else 0.0) if math.isfinite(L) else None,
                "passed": passed,
            }
        )
    fails = [r for r in rows if not r["passed"]]
    fails.sort(key=lambda r: (-(r["ratio"] if r["ratio"] is not None else math.inf), r["x1"], r["x2"]))
    frac = 1.0 if not rows else sum(r["passed"] for r in rows) / len(rows)
    return UniformReport(float(c), frac, rows, fails)
