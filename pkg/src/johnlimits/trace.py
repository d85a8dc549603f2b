"""Boundary traces of mappings along John curves.

Shadows of Whitney cubes, discrete lengths, boundary limits with error
radii, empirical class constants, gauge integrals, exceptional-set
content and the chain argument for uniqueness of limits.

Three image-diameter columns are computed for each cube met by a curve:

``members``
    diameter of the images of the cube's member samples;
``crossing``
    the same set plus the next curve vertex after every visit, so each
    sampled step of the curve is charged to a cube;
``outer-ball``
    images of all interior samples in the outer ball ``B^Q``.

Boundary limits use ``crossing``: its tail sums bound the oscillation of
the image along the sampled curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import cdist, pdist

from .errors import GeometryError
from .john import JohnProfile, check_uniform, verify_john_curve
from .metric import estimate_ahlfors
from .whitney import cube_chain

__all__ = [
    "ShadowMap",
    "DiscreteLengthReport",
    "BoundaryLimit",
    "ClassEstimate",
    "GaugeFunction",
    "GaugeVerdict",
    "ExceptionalReport",
    "COLUMNS",
    "compute_shadows",
    "shadow_level_counts",
    "max_level_counts",
    "shadow_measure_sums",
    "default_ahlfors",
    "cube_image_diameters",
    "discrete_length",
    "boundary_limit",
    "estimate_class_constant",
    "sample_balls",
    "gauge_integral",
    "gauge_closed_form",
    "exceptional_content",
    "uniqueness_check",
    "analytic_cells",
    "profile_for",
]

COLUMNS = ("members", "crossing", "outer-ball")


def _diameter(vals):
    vals = np.asarray(vals, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    vals = vals[np.all(np.isfinite(vals), axis=1)]
    if len(vals) < 2:
        return 0.0
    if vals.shape[1] == 1:
        return float(vals.max() - vals.min())
    if vals.shape[1] == 2 and len(vals) > 64:
        try:
            vals = vals[ConvexHull(vals).vertices]
        except QhullError:
            pass
    return float(pdist(vals).max())


def _constants(decomp, profile):
    p = decomp.params
    b = p.b
    C = profile.c * (b + 1) + 1
    return {
        "b": {"value": b, "formula": "a*C1/(c1*delta)"},
        "C": {"value": C, "formula": "c*(b+1)+1"},
        "c": {"value": profile.c, "formula": "John constant"},
    }


# -- shadows ------------------------------------------------------------------------


@dataclass
class ShadowMap:
    """Per-cube shadows ``S(Q)`` and per-curve cube lists."""

    decomp: object
    profile: JohnProfile
    curve_cubes: dict
    shadows: list
    constants: dict = field(default_factory=dict)

    @property
    def b(self):
        return self.constants["b"]["value"]

    @property
    def C(self):
        return self.constants["C"]["value"]

    def shadow(self, j):
        return self.shadows[j]

    def witness(self, j, xi):
        """Curve vertex of ``xi`` lying in cube ``j`` (membership witness)."""
        return self._witness[(int(j), int(xi))]

    def shadow_diameters(self):
        space = self.decomp.domain.space
        out = np.zeros(len(self.shadows))
        for j, s in enumerate(self.shadows):
            if len(s) > 1:
                if space.kind == "euclidean":
                    out[j] = _diameter(space.coords[s])
                else:
                    out[j] = float(space.cross(s, s).max())
        return out

    def diameter_bound(self):
        """``3 phi(C diam Q) + 4 eps`` per cube, using the effective cube diameter."""
        eff = self.decomp.effective_diameters
        return 3 * np.asarray(self.profile(self.C * eff)) + 4 * self.decomp.domain.epsilon

    def check_diameters(self):
        d = self.shadow_diameters()
        bound = self.diameter_bound()
        nonempty = np.array([len(s) > 0 for s in self.shadows])
        bad = np.flatnonzero(d > bound)
        ratio = np.where(nonempty, d / bound, 0.0)
        return {
            "cubes": int(nonempty.sum()),
            "violations": int(len(bad)),
            "worst_ratio": float(ratio.max()) if len(ratio) else 0.0,
            "witness": int(bad[0]) if len(bad) else None,
        }


def compute_shadows(decomp, domain, profile, curves):
    """Mark each cube met by each certified curve and invert to shadows."""
    if decomp.domain is not domain:
        raise GeometryError("bad-parameter", "decomposition belongs to another domain")
    curve_cubes = {}
    witness = {}
    lists = [[] for _ in range(len(decomp))]
    for xi in sorted(curves):
        curve = curves[xi]
        if curve.start != xi or not verify_john_curve(domain, curve, profile).passed:
            raise GeometryError("uncertified-curve", f"curve of {xi}")
        pos = domain.position(curve.vertices)
        keep = pos >= 0
        labs = decomp.label[pos[keep]]
        verts = curve.vertices[keep]
        uniq, first = np.unique(labs, return_index=True)
        curve_cubes[int(xi)] = uniq
        for j, v in zip(uniq, verts[first]):
            lists[j].append(int(xi))
            witness[(int(j), int(xi))] = int(v)
    shadows = [np.asarray(s, dtype=np.int64) for s in lists]
    sm = ShadowMap(decomp, profile, curve_cubes, shadows, _constants(decomp, profile))
    sm._witness = witness
    return sm


def default_ahlfors(domain, seed=0):
    """Ahlfors constant for the domain's own exponent on radii ``4 eps .. diam/4``."""
    hi = domain.diameter / 4
    lo = max(4 * domain.epsilon, hi / 16)
    return estimate_ahlfors(domain, np.geomspace(lo, hi, 5), seed=seed, q=domain.q)


def _count_bound(shadows, ahlfors, k):
    p = shadows.decomp.params
    q = shadows.decomp.domain.q
    dk = p.delta**k
    return ahlfors.C_q**2 * (2 * float(shadows.profile(2 * shadows.C * p.C1 * dk)) / (p.c1 * dk)) ** q


def _sum_bound(shadows, ahlfors, k):
    p = shadows.decomp.params
    q = shadows.decomp.domain.q
    dk = p.delta**k
    return ahlfors.C_q**2 * (2 * float(shadows.profile(shadows.C * p.C1 * dk)) / (p.c1 * dk)) ** q


def shadow_level_counts(shadows, xi, ahlfors=None):
    """Per level: ``a_k`` (level-k cubes whose shadow holds ``xi``) and its bound."""
    ahlfors = ahlfors or default_ahlfors(shadows.decomp.domain)
    decomp = shadows.decomp
    cubes = shadows.curve_cubes.get(int(xi), np.empty(0, dtype=np.int64))
    lv = decomp.level[cubes]
    rows = []
    for k in decomp.levels_present():
        a = int(np.sum(lv == k))
        bound = _count_bound(shadows, ahlfors, k)
        rows.append({"level": int(k), "count": a, "bound": bound, "holds": bool(a <= bound)})
    return rows


def max_level_counts(shadows, ahlfors=None):
    """Largest ``a_k`` over all curves, per level, against the same bound."""
    ahlfors = ahlfors or default_ahlfors(shadows.decomp.domain)
    decomp = shadows.decomp
    best = {k: 0 for k in decomp.levels_present()}
    for cubes in shadows.curve_cubes.values():
        lv, n = np.unique(decomp.level[cubes], return_counts=True)
        for k, m in zip(lv, n):
            best[int(k)] = max(best[int(k)], int(m))
    rows = []
    for k, a in best.items():
        bound = _count_bound(shadows, ahlfors, k)
        rows.append({"level": k, "max_count": a, "bound": bound, "holds": bool(a <= bound)})
    return rows


def shadow_measure_sums(shadows, E, ahlfors=None):
    """Per level: ``sum_Q mu(S_E(Q))`` against ``C_q^2 (2 phi(C C1 d^k)/(c1 d^k))^q mu(E)``."""
    decomp = shadows.decomp
    dom = decomp.domain
    ahlfors = ahlfors or default_ahlfors(dom)
    E = np.unique(np.asarray(list(E), dtype=np.int64))
    w = dom.boundary_cell_measure
    mu_E = w * len(E)
    per = {k: 0.0 for k in decomp.levels_present()}
    for j, s in enumerate(shadows.shadows):
        if len(s):
            per[int(decomp.level[j])] += w * int(np.isin(s, E, assume_unique=True).sum())
    rows = []
    for k, lhs in per.items():
        rhs = _sum_bound(shadows, ahlfors, k) * mu_E
        rows.append(
            {
                "level": k,
                "lhs": lhs,
                "rhs": rhs,
                "ratio": lhs / rhs if rhs > 0 else 0.0,
                "holds": bool(lhs <= rhs),
            }
        )
    return rows


# -- discrete length ----------------------------------------------------------------


def cube_image_diameters(f, decomp, column="members"):
    """Image diameter per Whitney cube for the ``members`` or ``outer-ball`` column."""
    cache = decomp.__dict__.setdefault("_image_cache", {})
    key = (id(f), column)
    hit = cache.get(key)
    if hit is not None and hit[0] is f:
        return hit[1]
    dom = decomp.domain
    out = np.zeros(len(decomp))
    if column == "members":
        for j in np.flatnonzero(decomp.sizes > 1):
            out[j] = _diameter(f(decomp.members(j)))
    elif column == "outer-ball":
        for k in decomp.levels_present():
            js = decomp.by_level(k)
            balls = dom.interior_index.balls(decomp.center[js], decomp.params.outer_radius(k))
            for j, b in zip(js, balls):
                out[j] = _diameter(f(dom.interior[b]))
    else:
        raise GeometryError("bad-parameter", f"unknown column {column!r}")
    out.setflags(write=False)
    cache[key] = (f, out)
    return out


@dataclass
class DiscreteLengthReport:
    total: float
    per_level: dict
    hits: list
    columns: dict

    def to_dict(self):
        return {
            "total": self.total,
            "per_level": {str(k): v for k, v in self.per_level.items()},
            "hits": self.hits,
            "columns": {
                c: {"total": v["total"], "per_level": {str(k): x for k, x in v["per_level"].items()}}
                for c, v in self.columns.items()
            },
        }


def _curve_cubes(decomp, curve):
    pos = decomp.domain.position(curve.vertices)
    idx = np.flatnonzero(pos >= 0)
    return idx, decomp.label[pos[idx]]


def discrete_length(f, decomp, curve):
    """Sum of image diameters over the Whitney cubes the curve meets."""
    idx, labs = _curve_cubes(decomp, curve)
    verts = curve.vertices
    order = []
    seen = set()
    succ = {}
    for i, j in zip(idx, labs):
        j = int(j)
        if j not in seen:
            seen.add(j)
            order.append(j)
        if i + 1 < len(verts):
            succ.setdefault(j, []).append(int(verts[i + 1]))
    members = cube_image_diameters(f, decomp, "members")
    outer = cube_image_diameters(f, decomp, "outer-ball")
    cols = {c: {} for c in COLUMNS}
    for j in order:
        k = int(decomp.level[j])
        dm = float(members[j])
        cross = dm
        s = succ.get(j)
        if s:
            s_img = f(np.asarray(s))
            m_img = f(decomp.members(j))
            fin_s = s_img[np.all(np.isfinite(s_img), axis=1)]
            fin_m = m_img[np.all(np.isfinite(m_img), axis=1)]
            if len(fin_s) and len(fin_m):
                cross = max(cross, float(cdist(fin_s, fin_m).max()), _diameter(fin_s))
        for c, v in (("members", dm), ("crossing", cross), ("outer-ball", float(outer[j]))):
            cols[c][k] = cols[c].get(k, 0.0) + v
    columns = {}
    for c in COLUMNS:
        per = dict(sorted(cols[c].items()))
        columns[c] = {"total": float(sum(per.values())), "per_level": per}
    hits = [[int(decomp.level[j]), int(j)] for j in order]
    return DiscreteLengthReport(columns["members"]["total"], columns["members"]["per_level"], hits, columns)


@dataclass
class BoundaryLimit:
    converged: bool
    value: list
    error_radius: float
    level: int | None
    tails: dict
    stuck_level: int | None
    oscillation: float
    cauchy_ok: bool
    column: str = "crossing"

    def to_dict(self):
        d = dict(self.__dict__)
        d["tails"] = {str(k): v for k, v in self.tails.items()}
        return d


def boundary_limit(f, decomp, curve, tol, column="crossing", report=None):
    """Limit of ``f`` along the curve towards ``curve.start`` with an error radius.

    Finds the coarsest level ``N`` whose tail sum (levels ``>= N``) is below
    ``tol``.  The limit is the image of the deepest interior vertex and the
    error radius is that tail sum.  If no level qualifies the result is a
    divergence report naming the deepest level and its tail.
    """
    report = report or discrete_length(f, decomp, curve)
    per = report.columns[column]["per_level"]
    levels = sorted(per)
    tails = {}
    acc = 0.0
    for k in reversed(levels):
        acc += per[k]
        tails[k] = acc
    tails = dict(sorted(tails.items()))
    idx, labs = _curve_cubes(decomp, curve)
    if len(idx) == 0:
        raise GeometryError("bad-parameter", "curve has no interior vertex")
    first = int(curve.vertices[idx[0]])
    value = f([first])[0]
    N = next((k for k in levels if tails[k] < tol), None)
    if N is None:
        stuck = levels[-1] if levels else None
        return BoundaryLimit(False, [float(x) for x in value], tails.get(stuck, 0.0), None, tails, stuck, math.nan, True, column)
    # oscillation over the prefix that stays in cubes of level >= N, plus its exit vertex
    lv = decomp.level[labs]
    stop = int(np.argmax(lv < N)) if np.any(lv < N) else len(idx) - 1
    pre = curve.vertices[idx[: stop + 1]]
    osc = float(np.max(np.sqrt(np.sum((f(pre) - value) ** 2, axis=1)))) if len(pre) else 0.0
    radius = tails[N]
    return BoundaryLimit(
        True, [float(x) for x in value], radius, int(N), tails, None, osc, bool(osc <= radius * (1 + 1e-9) + 1e-12), column
    )


# -- class constants ------------------------------------------------------------------


@dataclass
class ClassEstimate:
    tag: str
    sigma: float
    C: float
    table: list
    skipped: int

    def to_dict(self):
        return dict(self.__dict__)


def sample_balls(domain, radii, per_radius=16, sigma=1.5, seed=0):
    """Random ``(center, r)`` pairs with ``d_b(center) > sigma r + 2 eps``."""
    rng = np.random.default_rng(seed)
    out = []
    for r in radii:
        ok = np.flatnonzero(domain.clearance > sigma * r + 2 * domain.epsilon)
        if len(ok) == 0:
            continue
        pick = rng.choice(ok, size=min(per_radius, len(ok)), replace=False)
        out.extend((int(domain.interior[p]), float(r)) for p in np.sort(pick))
    return out


def estimate_class_constant(f, domain, alpha=None, sigma=1.5, tag="A1", balls=()):
    """Smallest ``C`` with ``diam f(B) <= C (int_{sigma B} alpha)^(1/q) [log(1/diam B)]^(1/q)``.

    The log factor applies to ``A2`` only.  Balls with ``sigma B`` not
    compactly inside the domain, or with ``diam B >= 1`` under ``A2``, are
    skipped and counted.
    """
    if tag not in ("A1", "A2"):
        raise GeometryError("bad-parameter", f"class tag {tag!r}")
    if sigma < 1:
        raise GeometryError("bad-parameter", "sigma must be >= 1")
    alpha = f.density if alpha is None else np.asarray(alpha, dtype=float)
    if alpha is None:
        raise GeometryError("bad-parameter", "map has no density")
    alpha = np.broadcast_to(alpha, (domain.space.n,)) if np.ndim(alpha) == 0 else alpha
    q = domain.q
    idx = domain.interior_index
    rows, skipped, C = [], 0, 0.0
    for x, r in balls:
        p = domain.position([x])[0]
        if p < 0 or domain.clearance[p] <= sigma * r + 2 * domain.epsilon:
            skipped += 1
            continue
        diam_b = 2 * r
        if tag == "A2" and diam_b >= 1:
            skipped += 1
            continue
        ball = domain.interior[idx.ball(x, r)]
        big = domain.interior[idx.ball(x, sigma * r)]
        num = _diameter(f(ball))
        integral = float(alpha[big].sum() * domain.cell_measure)
        den = integral ** (1 / q)
        if tag == "A2":
            den *= math.log(1 / diam_b) ** (1 / q)
        ratio = num / den if den > 0 else (math.inf if num > 0 else 0.0)
        C = max(C, ratio)
        rows.append({"center": int(x), "r": float(r), "diam_image": num, "integral": integral, "ratio": ratio})
    if not rows:
        raise GeometryError("bad-parameter", "every ball was skipped")
    return ClassEstimate(tag, float(sigma), float(C), rows, skipped)


# -- gauges -------------------------------------------------------------------------------


class GaugeFunction:
    """Increasing gauge ``h`` with ``h(0) = 0``.

    ``power``: ``h(s) = s**alpha``; ``log``: ``h(s) = (log 1/s)**(-beta)`` for
    ``s < 1/e`` and ``1`` above; ``table``: monotone interpolation.
    """

    def __init__(self, kind="power", alpha=1.0, beta=2.0, table=None):
        self.kind = kind
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.table = None
        if kind == "power" and self.alpha <= 0:
            raise GeometryError("bad-parameter", "alpha must be > 0")
        if kind == "log" and self.beta <= 0:
            raise GeometryError("bad-parameter", "beta must be > 0")
        if kind == "table":
            ts, vs = (np.asarray(a, dtype=float) for a in table)
            if ts[0] > 0:
                ts, vs = np.concatenate([[0.0], ts]), np.concatenate([[0.0], vs])
            self.table = (ts, vs)
            self._interp = PchipInterpolator(ts, vs, extrapolate=False)
        elif kind not in ("power", "log"):
            raise GeometryError("bad-parameter", f"unknown gauge kind {kind!r}")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.get("kind", "power")
        if kind == "table":
            return cls("table", table=(d["ts"], d["values"]))
        return cls(kind, alpha=d.get("alpha", 1.0), beta=d.get("beta", 2.0))

    def to_dict(self):
        if self.kind == "power":
            return {"kind": "power", "alpha": self.alpha}
        if self.kind == "log":
            return {"kind": "log", "beta": self.beta}
        return {"kind": "table", "ts": self.table[0].tolist(), "values": self.table[1].tolist()}

    @property
    def label(self):
        return {"power": f"s^{self.alpha:g}", "log": f"log(1/s)^-{self.beta:g}"}.get(self.kind, "table")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "power":
            out = np.power(np.maximum(s, 0.0), self.alpha)
        elif self.kind == "log":
            with np.errstate(divide="ignore"):
                out = np.where(s < np.exp(-1), np.log(1 / np.maximum(s, 1e-300)) ** (-self.beta), 1.0)
            out = np.where(s <= 0, 0.0, out)
        else:
            ts, vs = self.table
            out = np.where(s <= ts[-1], self._interp(np.clip(s, 0, ts[-1])), vs[-1])
        return out if out.ndim else float(out)

    def log_at(self, ls):
        """``log h(exp(ls))`` evaluated without forming ``exp(ls)`` for the built-ins."""
        ls = np.asarray(ls, dtype=float)
        if self.kind == "power":
            return self.alpha * ls
        if self.kind == "log":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(ls < -1, -self.beta * np.log(-ls), 0.0)
        with np.errstate(divide="ignore"):
            return np.log(self(np.exp(ls)))

    def doubling_constant(self, grid=None):
        grid = np.geomspace(1e-8, 0.5, 400) if grid is None else np.asarray(grid, dtype=float)
        h1 = self(grid)
        h2 = self(2 * grid)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(h1 > 0, h2 / h1, np.inf)
        return float(np.max(r))

    def validate(self, grid=None):
        grid = np.geomspace(1e-8, 2.0, 400) if grid is None else grid
        v = self(grid)
        out = []
        if float(self(0.0)) != 0:
            out.append("h(0) != 0")
        if np.any(np.diff(v) < 0):
            out.append("h not increasing")
        return out


def _log_phi(profile, u):
    """``log phi(exp(-u))``."""
    if profile.kind == "identity":
        return -u
    if profile.kind == "power":
        return math.log(profile.K) - profile.exponent * u
    with np.errstate(divide="ignore"):
        return np.log(profile(np.exp(-u)))


def _log_integrand(profile, h, q, variant):
    """``log`` of the integrand after the substitution ``u = log(1/t)``."""
    e = 1.0 / (q - 1)

    def g(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            lu = np.log(u)
        if variant == "uniqueness":
            return e * (h.log_at(-u) + lu)
        lphi = _log_phi(profile, u)
        out = q * (lphi + u) + e * h.log_at(lphi)
        if variant == "A2":
            out = out + e * lu
        return out

    return g


@dataclass
class GaugeVerdict:
    variant: str
    finite: bool
    value: float | None
    rate: float
    power: float
    q: float

    def to_dict(self):
        return dict(self.__dict__)


def gauge_integral(profile, h, q, variant="A1", u_fit=(20.0, 400.0), tol=1e-6):
    """Classify and evaluate the gauge integral of ``variant`` on ``(0, 1]``.

    With ``u = log(1/t)`` every variant becomes ``int_0^inf G(u) du``.  The
    tail of ``log G`` is fitted by ``c + p log u - rate u``: a positive rate
    means exponential decay, a negative one divergence, and for a zero rate
    the integral is finite iff ``p < -1``.  Finite integrals are evaluated
    by adaptive quadrature.
    """
    if q <= 1:
        raise GeometryError("exponent-out-of-range", f"q={q}")
    if variant not in ("A1", "A2", "uniqueness"):
        raise GeometryError("bad-parameter", f"variant {variant!r}")
    lg = _log_integrand(profile, h, q, variant)
    u = np.geomspace(u_fit[0], u_fit[1], 200)
    y = lg(u)
    if np.all(np.isneginf(y)):
        return GaugeVerdict(variant, True, 0.0, math.inf, -math.inf, q)
    A = np.stack([np.ones_like(u), np.log(u), -u], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    _, p, rate = (float(c) for c in coef)
    if rate > tol:
        finite = True
    elif rate < -tol:
        finite = False
    else:
        finite = p < -1 - 1e-3
    value = None
    if finite:
        G = lambda s: float(np.exp(lg(s)))
        v1, _ = integrate.quad(G, 0.0, 1.0, limit=500, epsabs=1e-13, epsrel=1e-11)
        v2, _ = integrate.quad(G, 1.0, np.inf, limit=500, epsabs=1e-13, epsrel=1e-11)
        value = v1 + v2
    return GaugeVerdict(variant, finite, value, rate, p, float(q))


def gauge_closed_form(phi_kind, h_kind, param, q, variant, K=2.0):
    """Closed-form value of the analytic cells (``None`` when infinite).

    ``phi_kind`` is ``"t"`` or ``"sqrt"`` (``K sqrt(t)``); ``h_kind`` is
    ``"power"`` (``param = alpha``) or ``"log"`` (``param = beta``).
    """
    e = 1.0 / (q - 1)
    G = math.gamma(1 + e)
    if variant == "uniqueness":
        if h_kind == "power":
            lam = param * e
            return G / lam ** (1 + e)
        return (q - 1) / q + (q - 1) / (param - q) if param > q else None
    if h_kind == "log":
        if phi_kind == "sqrt":
            return None
        if variant == "A1":
            return 1 + (q - 1) / (param - q + 1) if param > q - 1 else None
        return (q - 1) / q + (q - 1) / (param - q) if param > q else None
    if phi_kind == "t":
        lam, pref = param * e, 1.0
    else:
        lam = param * e / 2 - q / 2
        pref = K ** (q + param * e)
    if lam <= 0:
        return None
    if variant == "A1":
        return pref / lam
    return pref * G / lam ** (1 + e)


# -- exceptional sets --------------------------------------------------------------------


@dataclass
class ExceptionalReport:
    threshold: float
    ids: list
    content_bound: float
    n_sets: int
    note: str = "tested on the constructed curve family only; under-approximates E_f"

    def to_dict(self):
        return {
            "threshold": self.threshold,
            "count": len(self.ids),
            "ids": self.ids,
            "content_bound": self.content_bound,
            "n_sets": self.n_sets,
            "note": self.note,
        }


def _set_cost(space, sets, h, floor):
    tot = 0.0
    for s in sets:
        if len(s) == 0:
            continue
        d = _diameter(space.coords[s]) if space.kind == "euclidean" else float(space.cross(s, s).max())
        tot += float(h(max(d, floor)))
    return tot


def _greedy_cover(space, ids, h, floor):
    """Cheapest of the single-scale greedy covers over a dyadic ladder of radii."""
    ids = np.asarray(ids, dtype=np.int64)
    if len(ids) == 0:
        return 0.0, []
    best_cost, best_sets = _set_cost(space, [ids], h, floor), [ids]
    idx = space.index(ids)
    r = floor
    diam = _diameter(space.coords[ids]) if space.kind == "euclidean" else float(space.cross(ids, ids).max())
    while r < diam:
        covered = np.zeros(len(ids), dtype=bool)
        sets = []
        for p in range(len(ids)):
            if covered[p]:
                continue
            b = idx.ball(ids[p], r, closed=True)
            b = b[~covered[b]]
            covered[b] = True
            sets.append(ids[b])
        cost = _set_cost(space, sets, h, floor)
        if cost < best_cost:
            best_cost, best_sets = cost, sets
        r *= 2
    return best_cost, best_sets


def exceptional_content(f, domain, decomp, curves, h, thresholds, column="crossing", lengths=None):
    """``A_k = {xi : l_d >= k}`` and an upper bound for its ``h``-content per threshold.

    Covers use sets of boundary samples; a set's diameter is floored at the
    boundary spacing.  Each cover is also restricted to the next, smaller
    set so the bounds never increase with ``k``.
    """
    space = domain.space
    if lengths is None:
        lengths = {xi: discrete_length(f, decomp, curves[xi]).columns[column]["total"] for xi in sorted(curves)}
    floor = domain.boundary_spacing
    out = []
    prev_sets = None
    for k in sorted(thresholds):
        A = np.array(sorted(xi for xi, v in lengths.items() if v >= k), dtype=np.int64)
        cost, sets = _greedy_cover(space, A, h, floor)
        if prev_sets is not None:
            restricted = [s[np.isin(s, A)] for s in prev_sets]
            restricted = [s for s in restricted if len(s)]
            rc = _set_cost(space, restricted, h, floor)
            if rc <= cost:
                cost, sets = rc, restricted
        prev_sets = sets
        out.append(ExceptionalReport(float(k), [int(x) for x in A], float(cost), len(sets)))
    return out


# -- uniqueness -----------------------------------------------------------------------------


def _point_at_residual(curve, s):
    j = int(np.searchsorted(curve.arclen, s, side="left"))
    return int(curve.vertices[min(j, len(curve.vertices) - 1)])


def uniqueness_check(
    f, domain, decomp, xi, gamma, eta, scales, profile=None, sigma=1.5, tol=1e-2, uniform_c=10.0, limit_tol=0.05
):
    """Chain estimate between two John curves at matched residual lengths ``s``.

    For each ``s`` the points at length ``s`` from ``xi`` along both curves
    are joined by a shortest Whitney chain; cube centers serve as the
    intermediate points.  The verdict compares the boundary limits of ``f``
    along the two curves.
    """
    profile = profile or JohnProfile.identity(2.0)
    for cv in (gamma, eta):
        if cv.start != xi or not verify_john_curve(domain, cv, profile).passed:
            raise GeometryError("uncertified-curve", f"curve from {cv.start}")
    eps = domain.epsilon
    q = domain.q
    rows = []
    for s in scales:
        y1 = _point_at_residual(gamma, s)
        y2 = _point_at_residual(eta, s)
        clear = domain.clearance_of([y1, y2])
        chain = cube_chain(decomp, y1, y2)
        pts = [y1] + [int(decomp.center[j]) for j in chain[1:-1]] + [y2]
        if len(chain) == 1:
            pts = [y1, y2]
        est = float(np.sum(np.sqrt(np.sum(np.diff(f(pts), axis=0) ** 2, axis=1)))) if len(pts) > 1 else 0.0
        R = decomp.outer_radius[chain]
        cen = decomp.center[chain]
        ok = 0
        steps = max(len(pts) - 1, 0)
        for i in range(steps):
            a, b = pts[i], pts[i + 1]
            j = chain[min(i, len(chain) - 1)]
            j2 = chain[min(i + 1, len(chain) - 1)]
            inside = lambda y, jj: domain.space.dist(int(y), int(decomp.center[jj])) < sigma * decomp.outer_radius[jj]
            if (inside(a, j) and inside(b, j)) or (inside(a, j2) and inside(b, j2)):
                ok += 1
        dominant = None
        if f.density is not None:
            terms = []
            for j, c, r in zip(chain, cen, R):
                big = domain.interior[domain.interior_index.ball(int(c), sigma * r)]
                integ = float(f.density[big].sum() * domain.cell_measure)
                dq = float(decomp.effective_diameters[j])
                lg = math.log(1 / dq) if dq < 1 else 0.0
                terms.append(integ ** (1 / q) * lg ** (1 / q))
            dominant = float(max(terms))
        uni = check_uniform(domain, uniform_c, [(y1, y2)])
        rows.append(
            {
                "s": float(s),
                "y1": y1,
                "y2": y2,
                "distance": float(domain.space.dist(y1, y2)),
                "clearance_ok": bool(np.all(profile.c * clear >= s - 2 * eps)),
                "chain_length": len(chain),
                "chain_estimate": est,
                "ball_steps_ok": ok,
                "ball_steps": steps,
                "dominant_term": dominant,
                "uniform_pass": bool(uni.pass_fraction == 1.0),
                "uniform_witness": uni.witnesses[0] if uni.witnesses else None,
            }
        )
    lg_ = boundary_limit(f, decomp, gamma, limit_tol)
    le_ = boundary_limit(f, decomp, eta, limit_tol)
    gap = float(np.sqrt(np.sum((np.asarray(lg_.value) - np.asarray(le_.value)) ** 2)))
    return {
        "xi": int(xi),
        "map": f.name,
        "scales": rows,
        "limit_gamma": lg_.to_dict(),
        "limit_eta": le_.to_dict(),
        "gap": gap,
        "verdict": "unique" if gap <= tol else "non-unique",
        "uniform_hypothesis": bool(all(r["uniform_pass"] for r in rows)),
    }


def analytic_cells(q, K=2.0):
    """The twelve analytic gauge cells with parameters on both sides of each threshold.

    Returns ``(variant, phi_kind, h_kind, params)`` tuples; ``phi_kind`` is
    ``"t"`` or ``"sqrt"`` (``K sqrt(t)``) and ``params`` are exponents
    ``alpha`` for power gauges or ``beta`` for log gauges.
    """
    cells = []
    for variant in ("A1", "A2", "uniqueness"):
        for phi_kind in ("t", "sqrt"):
            for h_kind in ("power", "log"):
                if h_kind == "power":
                    params = [0.5, 1.0, 2.0] if phi_kind == "t" else [q * (q - 1) / 2, q * (q - 1), 2 * q * (q - 1)]
                else:
                    params = [q - 1, q - 0.5, q, q + 1]
                cells.append((variant, phi_kind, h_kind, params))
    return cells


def profile_for(phi_kind, K=2.0):
    """Gauge ``phi`` of an analytic cell as a :class:`JohnProfile` (``c = 1``)."""
    return JohnProfile.identity(1.0) if phi_kind == "t" else JohnProfile.power(K, 0.5, 1.0)
