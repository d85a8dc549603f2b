"""Dyadic-Whitney decomposition of a sampled domain.

Cubes are selected from a :class:`~johnlimits.dyadic.CubeSystem` built on
the interior samples.  A sample ``x`` lies in layer ``k`` when
``a C1 delta**k < d(x, boundary) <= a C1 delta**(k-1)``; every level-k cube
meeting layer k is a candidate and each candidate is replaced by its
largest candidate ancestor.  Distances to the complement are measured
against the boundary samples.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial.distance import pdist

from .dyadic import build_cube_system
from .errors import GeometryError

__all__ = [
    "WhitneyParams",
    "WhitneyDecomposition",
    "validate_whitney_params",
    "build_whitney",
    "whitney_decomposition",
    "overlap_count",
    "overlap_counts",
    "cube_chain",
    "LAMBDA_0",
    "TOUCH",
    "BALL",
]

LAMBDA_0 = 1.5
TOUCH = 1  # members within 2*eps
BALL = 2  # outer balls intersect


def validate_whitney_params(delta, c1=None, C1=None, a=None):
    """True iff ``a >= 4``, ``6 c1 <= C1``, ``2 C1 delta <= c1`` and ``0 < delta < 1``.

    Accepts either four numbers or a :class:`WhitneyParams`.
    """
    if isinstance(delta, WhitneyParams):
        delta, c1, C1, a = delta.delta, delta.c1, delta.C1, delta.a
    tol = 1 + 1e-12
    return bool(
        0 < delta < 1
        and a >= 4
        and 6 * c1 <= C1 * tol
        and 2 * C1 * delta <= c1 * tol
        and min(c1, C1, a) > 0
    )


@dataclass(frozen=True)
class WhitneyParams:
    delta: float = 1 / 12
    c1: float = 1 / 3
    C1: float = 2.0
    a: float = 4.0

    def __post_init__(self):
        if not validate_whitney_params(self.delta, self.c1, self.C1, self.a):
            raise GeometryError(
                "bad-parameter", f"whitney parameters violate a>=4, 6c1<=C1, 2C1*delta<=c1: {self}"
            )

    @property
    def c0(self):
        return 3 * self.c1

    @property
    def C0(self):
        return self.C1 / 2

    @property
    def b(self):
        """``a C1 / (c1 delta)``: ratio of upper distance bound to inner radius."""
        return self.a * self.C1 / (self.c1 * self.delta)

    def layer(self, d):
        """Layer index ``k`` with ``a C1 delta^k < d <= a C1 delta^(k-1)``."""
        d = np.asarray(d, dtype=float)
        base = self.a * self.C1
        k = np.floor(np.log(d / base) / np.log(self.delta)).astype(np.int64) + 1
        # repair floating rounding at layer boundaries
        for _ in range(2):
            k = np.where(d <= base * self.delta**k, k + 1, k)
            k = np.where(d > base * self.delta ** (k - 1), k - 1, k)
        return k

    def inner_radius(self, k):
        return self.c1 * self.delta ** np.asarray(k, dtype=float)

    def outer_radius(self, k):
        return self.C1 * self.delta ** np.asarray(k, dtype=float)


class WhitneyDecomposition:
    """Selected Whitney cubes with geometry, adjacency and per-sample labels.

    Cube ``j`` is dyadic cube ``(level[j], alpha[j])``; ``label[p]`` is the
    Whitney cube of the interior sample at position ``p``.
    """

    def __init__(self, domain, cubes, params, level, alpha, label, layer):
        self.domain = domain
        self.cubes = cubes
        self.params = params
        self.level = level
        self.alpha = alpha
        self.label = label
        self.layer = layer
        self.center = np.array([cubes.centers(k)[a] for k, a in zip(level, alpha)], dtype=np.int64)
        self.inner_radius = params.inner_radius(level)
        self.outer_radius = params.outer_radius(level)
        clr = domain.clearance
        dist = np.full(len(level), np.inf)
        np.minimum.at(dist, label, clr)
        self.dist_to_boundary = dist
        self.sizes = np.bincount(label, minlength=len(level))
        for arr in (self.level, self.alpha, self.label, self.layer, self.center, dist, self.sizes):
            arr.setflags(write=False)
        self.overlap_constant = LAMBDA_0

    def __len__(self):
        return len(self.level)

    @cached_property
    def _groups(self):
        order = np.argsort(self.label, kind="stable")
        bounds = np.searchsorted(self.label[order], np.arange(len(self) + 1))
        ids = self.domain.interior[order]
        return [ids[bounds[j]:bounds[j + 1]] for j in range(len(self))]

    def members(self, j):
        return self._groups[j]

    def cube_of(self, x):
        p = self.domain.position([x])[0]
        if p < 0:
            raise GeometryError("not-interior", f"sample {x}")
        return int(self.label[p])

    def levels_present(self):
        return sorted(set(int(k) for k in self.level))

    def by_level(self, k):
        return np.flatnonzero(self.level == k)

    @cached_property
    def diameters(self):
        """Sample diameter of each cube's member set."""
        space = self.domain.space
        out = np.zeros(len(self))
        for j in np.flatnonzero(self.sizes > 1):
            m = self.members(j)
            if space.kind == "euclidean":
                out[j] = _point_diameter(space.coords[m])
            else:
                out[j] = float(space.cross(m, m).max())
        out.setflags(write=False)
        return out

    @property
    def effective_diameters(self):
        """``max(sample diameter, c1 delta^k)``: a cube is never thinner than its inner ball."""
        return np.maximum(self.diameters, self.inner_radius)

    @cached_property
    def adjacency(self):
        """Symmetric CSR matrix; entry = bit flags ``TOUCH | BALL``."""
        return _adjacency(self)

    # -- verification -------------------------------------------------------

    def check(self):
        """Violation counts for every Whitney invariant (all zero when sound)."""
        p = self.params
        dom = self.domain
        eps = dom.epsilon
        space = dom.space
        out = {}
        # partition
        counts = np.bincount(self.label, minlength=len(self))
        out["partition"] = int(np.sum(counts == 0)) + int(len(self.label) != len(dom.interior))
        # members coincide with the underlying dyadic cube
        bad = 0
        for j in range(len(self)):
            if self.sizes[j] != self.cubes.sizes(int(self.level[j]))[self.alpha[j]]:
                bad += 1
        out["dyadic_members"] = bad
        # distance sandwich
        k = self.level.astype(float)
        lo = (p.a - 2) * p.C1 * p.delta**k
        hi = p.a * p.C1 * p.delta ** (k - 1)
        d = self.dist_to_boundary
        out["dist_lower"] = int(np.sum(d < lo * (1 - 1e-12)))
        out["dist_upper"] = int(np.sum(d > hi + 2 * eps))
        # 3/2 B^Q free of boundary samples
        _, dc = dom.boundary_index.nearest(self.center)
        out["three_halves_ball"] = int(np.sum(dc < LAMBDA_0 * self.outer_radius))
        # ball sandwich on samples
        cpos = dom.position(self.center)
        pos = np.arange(len(dom.interior))
        dm = space.pair_dist(dom.interior, self.center[self.label])
        out["outer_ball"] = int(np.sum(dm >= self.outer_radius[self.label]))
        inner_bad = int(np.sum(self.label[cpos] != np.arange(len(self))))
        big = np.flatnonzero(self.inner_radius > eps / 2)
        if len(big):
            balls = dom.interior_index.balls(self.center[big], self.inner_radius[big])
            for j, b in zip(big, balls):
                inner_bad += int(np.sum(self.label[b] != j))
        out["inner_ball"] = inner_bad
        del pos
        # maximality: no strict ancestor is itself a candidate
        cand = _candidates(self.cubes, self.layer)
        bad = 0
        for j in range(len(self)):
            kk, a = int(self.level[j]), int(self.alpha[j])
            for lev in range(self.cubes.params.k_min, kk):
                if cand[lev][self.cubes.ancestor(kk, a, lev)]:
                    bad += 1
                    break
        out["maximality"] = bad
        # diameter comparable to distance
        ratio = d / self.effective_diameters
        out["diam_ratio"] = int(np.sum(ratio < (p.a - 2) / 2 * (1 - 1e-12)) + np.sum(ratio > p.b * (1 + 1e-12)))
        return out

    # -- export ---------------------------------------------------------------

    def iter_records(self):
        for j in range(len(self)):
            yield {
                "level": int(self.level[j]),
                "center": int(self.center[j]),
                "inner_radius": float(self.inner_radius[j]),
                "outer_radius": float(self.outer_radius[j]),
                "dist_to_boundary": float(self.dist_to_boundary[j]),
                "members_count": int(self.sizes[j]),
            }

    def write_jsonl(self, path):
        with open(path, "w") as fh:
            for rec in self.iter_records():
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _point_diameter(pts):
    if len(pts) < 2:
        return 0.0
    if pts.shape[1] == 2 and len(pts) > 64:
        from scipy.spatial import ConvexHull, QhullError

        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass
    return float(pdist(pts).max())


def _candidates(cubes, layer):
    cand = {}
    for k in cubes.levels:
        mark = np.zeros(cubes.n_cubes(k), dtype=bool)
        sel = layer == k
        mark[cubes.labels[k][sel]] = True
        cand[k] = mark
    return cand


def build_whitney(domain, cubes, params=None):
    """Select the maximal candidate cubes; see the module docstring."""
    params = params or WhitneyParams()
    if not validate_whitney_params(params):
        raise GeometryError("bad-parameter")
    if len(domain.boundary) == 0:
        raise GeometryError("improper-domain")
    np_ = cubes.params
    if not (
        math.isclose(np_.delta, params.delta, rel_tol=1e-9)
        and math.isclose(np_.c0, params.c0, rel_tol=1e-9)
        and math.isclose(np_.C0, params.C0, rel_tol=1e-9)
    ):
        raise GeometryError("bad-parameter", "cube system must use c0 = 3 c1, C0 = C1/2 and the same delta")
    if not np.array_equal(cubes.sample_ids, domain.interior):
        raise GeometryError("bad-parameter", "cube system must be built on the interior samples")
    layer = params.layer(domain.clearance)
    if layer.max() > np_.k_max or layer.min() <= np_.k_min:
        raise GeometryError(
            "insufficient-depth", f"layers {layer.min()}..{layer.max()} need cube levels beyond {np_.k_min}..{np_.k_max}"
        )
    cand = _candidates(cubes, layer)
    n = len(domain.interior)
    chosen_level = np.full(n, np.iinfo(np.int64).min, dtype=np.int64)
    chosen_alpha = np.full(n, -1, dtype=np.int64)
    for k in cubes.levels:
        lab = cubes.labels[k]
        hit = (chosen_alpha < 0) & cand[k][lab]
        chosen_level[hit] = k
        chosen_alpha[hit] = lab[hit]
    if np.any(chosen_alpha < 0):
        raise GeometryError("construction", "uncovered interior samples")
    key = np.stack([chosen_level, chosen_alpha], axis=1)
    uniq, label = np.unique(key, axis=0, return_inverse=True)
    label = label.ravel().astype(np.int64)
    return WhitneyDecomposition(
        domain, cubes, params, uniq[:, 0].copy(), uniq[:, 1].copy(), label, layer
    )


def whitney_decomposition(domain, params=None):
    """Build the matching cube system and the decomposition in one call."""
    params = params or WhitneyParams()
    deepest = int(params.layer(domain.clearance).max())
    cubes = build_cube_system(
        domain.space, params.delta, params.c0, params.C0, ids=domain.interior, deepest=deepest
    )
    return build_whitney(domain, cubes, params)


def _adjacency(decomp):
    dom = decomp.domain
    eps = dom.epsilon
    n = len(decomp)
    flags = {}
    pr = dom.interior_index.pairs(2 * eps, closed=True)
    la = decomp.label[pr[:, 0]]
    lb = decomp.label[pr[:, 1]]
    keep = la != lb
    e = np.unique(np.sort(np.stack([la[keep], lb[keep]], axis=1), axis=1), axis=0)
    rows = [e[:, 0]]
    cols = [e[:, 1]]
    vals = [np.full(len(e), TOUCH, dtype=np.int64)]
    space = dom.space
    levels = decomp.levels_present()
    groups = {k: decomp.by_level(k) for k in levels}
    for i, k in enumerate(levels):
        for k2 in levels[i:]:
            a_idx, b_idx = groups[k], groups[k2]
            ra = decomp.params.outer_radius(k)
            rb = decomp.params.outer_radius(k2)
            tree = space.index(decomp.center[b_idx])
            balls = tree.balls(decomp.center[a_idx], ra + rb)
            src = np.repeat(a_idx, [len(b) for b in balls])
            dst = b_idx[np.concatenate(balls)] if len(src) else np.empty(0, dtype=np.int64)
            ok = src != dst
            src, dst = src[ok], dst[ok]
            pair = np.sort(np.stack([src, dst], axis=1), axis=1)
            rows.append(pair[:, 0])
            cols.append(pair[:, 1])
            vals.append(np.full(len(pair), BALL, dtype=np.int64))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    # combine flags with bitwise or over duplicate pairs
    key = r * n + c
    order = np.argsort(key, kind="stable")
    key, v = key[order], v[order]
    uk, start = np.unique(key, return_index=True)
    merged = np.bitwise_or.reduceat(v, start) if len(v) else v
    r, c = uk // n, uk % n
    m = sparse.coo_matrix(
        (np.concatenate([merged, merged]), (np.concatenate([r, c]), np.concatenate([c, r]))), shape=(n, n)
    ).tocsr()
    m.sort_indices()
    del flags
    return m


def overlap_count(decomp, lam, x):
    """Number of cubes ``Q`` with ``x`` in ``lam * B^Q``; ``1 <= lam <= 3/2``."""
    if not 1 <= lam <= LAMBDA_0:
        raise GeometryError("lambda-out-of-range", f"lambda={lam}")
    d = decomp.domain.space.dist_to(x, decomp.center)
    return int(np.sum(d < lam * decomp.outer_radius))


def overlap_counts(decomp, lam=LAMBDA_0):
    """``overlap_count`` for every interior sample (by position)."""
    if not 1 <= lam <= LAMBDA_0:
        raise GeometryError("lambda-out-of-range", f"lambda={lam}")
    dom = decomp.domain
    counts = np.zeros(len(dom.interior), dtype=np.int64)
    for k in decomp.levels_present():
        js = decomp.by_level(k)
        r = lam * decomp.params.outer_radius(k)
        balls = dom.interior_index.balls(decomp.center[js], r)
        if balls:
            hits = np.concatenate(balls)
            np.add.at(counts, hits, 1)
    return counts


def cube_chain(decomp, x1, x2):
    """Shortest chain of adjacent Whitney cubes from the cube of ``x1`` to that of ``x2``."""
    a = decomp.cube_of(x1)
    b = decomp.cube_of(x2)
    if a == b:
        return [a]
    _, pred = csgraph.breadth_first_order(decomp.adjacency, a, directed=False, return_predecessors=True)
    if pred[b] < 0:
        raise GeometryError("no-chain", f"cubes {a} and {b} are not connected")
    chain = [b]
    while chain[-1] != a:
        chain.append(int(pred[chain[-1]]))
    return chain[::-1]
