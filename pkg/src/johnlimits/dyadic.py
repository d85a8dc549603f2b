"""Net hierarchies and the nested dyadic cube system on a sampled space.

Construction (deterministic, all ties to the lowest index):

* level-k centers: scan samples in ascending id order and admit a sample
  iff it is at distance >= ``c0 * delta**k`` from every admitted center;
* finest level: each sample joins the cube of its nearest center;
* coarser levels: each level-(k+1) center attaches to its nearest level-k
  center, and a cube is the union of its children.

With ``12 * C0 * delta <= c0`` the cubes satisfy the ball sandwich
``B(z, c0/3 delta^k) <= Q <= B(z, 2 C0 delta^k)`` exactly on samples.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

__all__ = [
    "NetParams",
    "NetSystem",
    "DyadicCube",
    "CubeSystem",
    "validate_net_params",
    "build_nets",
    "build_cubes",
    "build_cube_system",
    "locate",
    "auto_levels",
]


def validate_net_params(delta, c0, C0):
    """True iff ``12 C0 delta <= c0 <= C0`` (with ``0 < delta < 1``)."""
    if min(delta, c0, C0) <= 0:
        raise GeometryError("bad-parameter", "parameters must be positive")
    if not delta < 1:
        raise GeometryError("bad-parameter", "delta must be < 1")
    return bool(12 * C0 * delta <= c0 * (1 + 1e-12) and c0 <= C0)


@dataclass(frozen=True)
class NetParams:
    delta: float = 1 / 12
    c0: float = 1.0
    C0: float = 1.0
    k_min: int = 0
    k_max: int = 0

    def __post_init__(self):
        if not validate_net_params(self.delta, self.c0, self.C0):
            raise GeometryError("bad-parameter", "need 12*C0*delta <= c0 <= C0")
        if self.k_min > self.k_max:
            raise GeometryError("bad-parameter", "k_min > k_max")

    @property
    def c1(self):
        return self.c0 / 3

    @property
    def C1(self):
        return 2 * self.C0

    @property
    def levels(self):
        return range(self.k_min, self.k_max + 1)

    def separation(self, k):
        return self.c0 * self.delta**k

    def covering(self, k):
        return self.C0 * self.delta**k


def auto_levels(space, delta, c0, C0, ids=None, deepest=None):
    """Level range with one root cube and singleton cubes at the bottom.

    ``k_min`` is the largest level whose separation exceeds the diameter;
    ``k_max`` the first level whose separation is below the sample spacing,
    pushed down to ``deepest`` when given.
    """
    diam = space.diameter_bound()
    spacing = space.min_spacing() if ids is None else _subset_spacing(space, np.asarray(ids))
    k_min = math.floor(math.log(max(diam, 1e-300) / c0) / math.log(delta)) if diam > 0 else 0
    while c0 * delta**k_min <= diam:
        k_min -= 1
    k_max = k_min
    while c0 * delta**k_max >= spacing:
        k_max += 1
    if deepest is not None:
        k_max = max(k_max, deepest)
    return k_min, k_max


@dataclass(frozen=True)
class NetSystem:
    """Per-level center ids (index alpha = position in the level's list)."""

    params: NetParams
    sample_ids: np.ndarray
    centers: dict

    def check(self, space):
        """Return violations of separation/covering (empty when valid)."""
        out = []
        idx = space.index(self.sample_ids)
        for k in self.params.levels:
            z = self.centers[k]
            sep = self.params.separation(k)
            cidx = space.index(z)
            close = cidx.pairs(sep)
            if len(close):
                out.append(f"separation@{k}")
            _, d = cidx.nearest(idx.ids)
            if np.any(d >= self.params.covering(k)):
                out.append(f"covering@{k}")
        return out


def _greedy_net(space, sample_ids, sep):
    idx = space.index(sample_ids)
    blocked = np.zeros(len(sample_ids), dtype=bool)
    admitted = []
    for p in range(len(sample_ids)):
        if blocked[p]:
            continue
        admitted.append(p)
        blocked[idx.ball(sample_ids[p], sep)] = True
    return sample_ids[np.asarray(admitted, dtype=np.int64)]


def build_nets(space, params, ids=None):
    """Greedy id-ordered nets, one per level of ``params``."""
    if not isinstance(params, NetParams):
        raise GeometryError("bad-parameter")
    sample_ids = np.sort(np.asarray(space.ids if ids is None else ids, dtype=np.int64))
    if len(sample_ids) == 0:
        raise GeometryError("empty-space")
    spacing = None
    centers = {}
    for k in params.levels:
        sep = params.separation(k)
        if spacing is None:
            spacing = space.min_spacing() if ids is None else _subset_spacing(space, sample_ids)
        if sep < spacing:
            centers[k] = sample_ids.copy()
        else:
            centers[k] = _greedy_net(space, sample_ids, sep)
        centers[k].setflags(write=False)
    return NetSystem(params, sample_ids, centers)


def _subset_spacing(space, ids):
    if len(ids) < 2:
        return math.inf
    if space.kind == "euclidean":
        from scipy.spatial import cKDTree

        d, _ = cKDTree(space.coords[ids]).query(space.coords[ids], k=2)
        return float(d[:, 1].min())
    m = space.cross(ids, ids)
    np.fill_diagonal(m, np.inf)
    return float(m.min())


@dataclass(frozen=True)
class DyadicCube:
    level: int
    index: int
    center: int
    members: np.ndarray
    parent: int | None
    children: tuple


class CubeSystem:
    """Nested partitions of the sample set, one per level.

    ``labels[k][p]`` is the level-k cube index of the sample at position
    ``p`` of ``sample_ids``; ``parents[k][a]`` is the level-(k-1) index of
    cube ``a`` at level ``k``.
    """

    def __init__(self, space, params, nets, labels, parents):
        self.space = space
        self.params = params
        self.nets = nets
        self.sample_ids = nets.sample_ids
        self.labels = labels
        self.parents = parents
        pos = np.full(space.n, -1, dtype=np.int64)
        pos[self.sample_ids] = np.arange(len(self.sample_ids))
        self._pos = pos
        self._members = {}

    @property
    def levels(self):
        return self.params.levels

    def centers(self, k):
        return self.nets.centers[k]

    def n_cubes(self, k):
        return len(self.nets.centers[k])

    def position(self, ids):
        return self._pos[np.asarray(ids, dtype=np.int64)]

    def members(self, k, a):
        """Sample ids of cube ``(k, a)``, ascending."""
        groups = self._member_groups(k)
        return groups[a]

    def _member_groups(self, k):
        g = self._members.get(k)
        if g is None:
            lab = self.labels[k]
            order = np.argsort(lab, kind="stable")
            bounds = np.searchsorted(lab[order], np.arange(self.n_cubes(k) + 1))
            ids = self.sample_ids[order]
            g = [ids[bounds[a]:bounds[a + 1]] for a in range(self.n_cubes(k))]
            self._members[k] = g
        return g

    def sizes(self, k):
        return np.bincount(self.labels[k], minlength=self.n_cubes(k))

    def parent(self, k, a):
        if k == self.params.k_min:
            return None
        return int(self.parents[k][a])

    def children(self, k, a):
        if k == self.params.k_max:
            return ()
        return tuple(int(c) for c in np.flatnonzero(self.parents[k + 1] == a))

    def ancestor(self, k, a, level):
        """Index of the level-``level`` ancestor of cube ``(k, a)``."""
        for j in range(k, level, -1):
            a = int(self.parents[j][a])
        return a

    def cube(self, k, a):
        return DyadicCube(
            k, a, int(self.centers(k)[a]), self.members(k, a), self.parent(k, a), self.children(k, a)
        )

    # -- verification ----------------------------------------------------

    def check(self):
        """Exact partition, nesting, parent consistency and ball sandwich checks.

        Returns a dict of violation counts per invariant.
        """
        p = self.params
        out = {"partition": 0, "nesting": 0, "parents": 0, "inner_ball": 0, "outer_ball": 0}
        n = len(self.sample_ids)
        idx = self.space.index(self.sample_ids)
        for k in self.levels:
            lab = self.labels[k]
            if len(lab) != n or lab.min() < 0 or lab.max() >= self.n_cubes(k):
                out["partition"] += 1
            if np.any(self.sizes(k) == 0):
                out["partition"] += 1
            if k > p.k_min:
                # every level-k cube lies inside exactly one level-(k-1) cube
                implied = self.parents[k][lab]
                if not np.array_equal(implied, self.labels[k - 1]):
                    out["nesting"] += int(np.sum(implied != self.labels[k - 1]))
            if k < p.k_max:
                centers_next = self.centers(k + 1)
                par = self.parents[k + 1]
                own = self.labels[k][self.position(centers_next)]
                out["parents"] += int(np.sum(own != par))
            z = self.centers(k)
            zpos = self.position(z)
            if np.any(lab[zpos] != np.arange(len(z))):
                out["inner_ball"] += int(np.sum(lab[zpos] != np.arange(len(z))))
            d = self.space.pair_dist(self.sample_ids, z[lab])
            out["outer_ball"] += int(np.sum(d >= p.C1 * p.delta**k))
            inner = p.c1 * p.delta**k
            if inner > 0:
                balls = idx.balls(z, inner)
                for a, b in enumerate(balls):
                    if len(b) and np.any(lab[b] != a):
                        out["inner_ball"] += int(np.sum(lab[b] != a))
        return out

    # -- export -----------------------------------------------------------

    def iter_records(self, with_members=False):
        for k in self.levels:
            sizes = self.sizes(k)
            for a, z in enumerate(self.centers(k)):
                rec = {
                    "level": int(k),
                    "index": int(a),
                    "center": int(z),
                    "parent": self.parent(k, a),
                    "members_count": int(sizes[a]),
                }
                if with_members:
                    rec["member_ids"] = [int(x) for x in self.members(k, a)]
                yield rec

    def write_jsonl(self, path, with_members=False):
        with open(path, "w") as fh:
            for rec in self.iter_records(with_members):
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def build_cubes(space, nets, params=None):
    """Assemble the nested cube system from per-level nets."""
    params = params or nets.params
    bad = nets.check(space)
    if bad:
        raise GeometryError("invalid-net", ", ".join(bad))
    ids = nets.sample_ids
    levels = list(params.levels)
    labels, parents = {}, {}
    kf = levels[-1]
    zf = nets.centers[kf]
    if len(zf) == len(ids):
        labels[kf] = np.arange(len(ids))
    else:
        labels[kf], _ = space.index(zf).nearest(ids)
    for k in reversed(levels[1:]):
        z_child = nets.centers[k]
        z_par = nets.centers[k - 1]
        if len(z_par) == len(z_child):
            par = np.arange(len(z_child))
        else:
            par, _ = space.index(z_par).nearest(z_child)
        parents[k] = par
        labels[k - 1] = par[labels[k]]
    for arr in list(labels.values()) + list(parents.values()):
        arr.setflags(write=False)
    return CubeSystem(space, params, nets, labels, parents)


def build_cube_system(space, delta=1 / 12, c0=1.0, C0=1.0, ids=None, deepest=None):
    """Nets plus cubes with automatically chosen level range."""
    sample_ids = None if ids is None else np.sort(np.asarray(ids, dtype=np.int64))
    if not validate_net_params(delta, c0, C0):
        raise GeometryError("bad-parameter", "need 12*C0*delta <= c0 <= C0")
    k_min, k_max = auto_levels(space, delta, c0, C0, ids=sample_ids, deepest=deepest)
    params = NetParams(delta, c0, C0, k_min, k_max)
    nets = build_nets(space, params, ids=sample_ids)
    return build_cubes(space, nets, params)


def locate(system, x, k):
    """Index of the level-``k`` cube containing sample ``x``."""
    if k not in system.levels:
        raise GeometryError("bad-parameter", f"level {k} outside range")
    p = system.position([x])[0] if 0 <= x < system.space.n else -1
    if p < 0:
        raise GeometryError("unknown-point", f"sample {x}")
    return int(system.labels[k][p])
