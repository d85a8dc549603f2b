import json

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from johnlimits.dyadic import build_cube_system
from johnlimits.errors import GeometryError
from johnlimits.generators import make_domain
from johnlimits.whitney import (
    BALL,
    LAMBDA_0,
    TOUCH,
    WhitneyParams,
    build_whitney,
    cube_chain,
    overlap_count,
    overlap_counts,
    validate_whitney_params,
    whitney_decomposition,
)


@pytest.mark.parametrize(
    "C1, a, ok",
    [(2.0, 4.0, True), (1.0, 4.0, False), (2.0, 3.0, False)],
)
def test_parameter_constraint(C1, a, ok):
    assert validate_whitney_params(1 / 12, 1 / 3, C1, a) is ok


def test_bad_parameters_are_rejected_before_building():
    with pytest.raises(GeometryError, match="bad-parameter"):
        WhitneyParams(a=3.0)


def test_derived_constants():
    p = WhitneyParams()
    assert p.b == pytest.approx(288.0)
    assert p.c0 == pytest.approx(1.0) and p.C0 == pytest.approx(1.0)


def test_layer_brackets_the_distance():
    p = WhitneyParams()
    d = np.geomspace(1e-4, 1.0, 500)
    k = p.layer(d)
    assert np.all(p.a * p.C1 * p.delta**k < d)
    assert np.all(d <= p.a * p.C1 * p.delta ** (k - 1))


@pytest.mark.parametrize("name", ["square", "disc", "slit-disc", "annulus", "cusp"])
def test_every_invariant_holds(name):
    dom = make_domain(name, 1 / 64)
    w = whitney_decomposition(dom)
    assert all(v == 0 for v in w.check().values()), w.check()


def test_partition_and_distance_sandwich_by_brute_force(square64):
    dom, w, p = square64.domain, square64.decomp, square64.decomp.params
    co = dom.space.coords
    counts = np.zeros(len(dom.interior), dtype=int)
    bpts = co[dom.boundary]
    for j in range(len(w)):
        members = w.members(j)
        counts[dom.position(members)] += 1
        d = cdist(co[members], bpts).min()
        k = w.level[j]
        assert d == pytest.approx(w.dist_to_boundary[j])
        assert (p.a - 2) * p.C1 * p.delta**k <= d <= p.a * p.C1 * p.delta ** (k - 1) + 2 * dom.epsilon
        assert cdist(co[[w.center[j]]], bpts).min() >= LAMBDA_0 * p.outer_radius(k)
    assert np.all(counts == 1)


def test_thin_rectangle_levels_and_diameters():
    dom = make_domain("rectangle", 1 / 128)
    w = whitney_decomposition(dom)
    p = w.params
    for k in w.levels_present():
        assert p.a * p.C1 * p.delta ** (k - 1) >= dom.epsilon / 2
    assert w.diameters.max() <= 1 / 16
    assert all(v == 0 for v in w.check().values())


def test_cube_system_must_match_parameters(square64):
    dom = square64.domain
    cubes = build_cube_system(dom.space, 1 / 12, 1.0, 1.0, ids=dom.interior, deepest=4)
    with pytest.raises(GeometryError, match="bad-parameter"):
        build_whitney(dom, cubes, WhitneyParams(1 / 24, 1 / 3, 2.0, 4.0))
    shallow = build_cube_system(dom.space, 1 / 12, 1.0, 1.0, ids=dom.interior, deepest=1)
    if shallow.params.k_max < int(WhitneyParams().layer(dom.clearance).max()):
        with pytest.raises(GeometryError, match="insufficient-depth"):
            build_whitney(dom, shallow)


def test_overlap_at_a_center_counts_its_own_cube(square64):
    w = square64.decomp
    j = int(np.argmax(w.sizes))
    assert overlap_count(w, 1.0, int(w.center[j])) >= 1


def test_overlap_counts_match_pointwise_counts(square64):
    w, dom = square64.decomp, square64.domain
    counts = overlap_counts(w)
    rng = np.random.default_rng(2)
    for p in rng.choice(len(dom.interior), 40, replace=False):
        assert counts[p] == overlap_count(w, LAMBDA_0, int(dom.interior[p]))
    assert counts.min() >= 1


def test_overlap_factor_beyond_three_halves_is_rejected(square64):
    with pytest.raises(GeometryError, match="lambda-out-of-range"):
        overlap_count(square64.decomp, 2.0, int(square64.domain.center))


def test_chain_of_a_point_to_itself(square64):
    x = int(square64.domain.center)
    assert cube_chain(square64.decomp, x, x) == [square64.decomp.cube_of(x)]


def test_adjacent_cubes_give_chain_of_two(square64):
    w = square64.decomp
    adj = w.adjacency.tocoo()
    i = int(np.flatnonzero(adj.data & TOUCH)[0])
    a, b = int(adj.row[i]), int(adj.col[i])
    assert len(cube_chain(w, int(w.center[a]), int(w.center[b]))) == 2
    assert set(np.unique(adj.data)) <= {TOUCH, BALL, TOUCH | BALL}


def test_chain_lengths_are_uniform_across_scales(square64):
    dom, w = square64.domain, square64.decomp
    co = dom.space.coords
    rng = np.random.default_rng(0)
    worst = {}
    for s in (1 / 4, 1 / 8, 1 / 16):
        ok = dom.interior[dom.clearance >= s]
        lengths = []
        for _ in range(40):
            x = rng.choice(ok)
            near = ok[np.hypot(*(co[ok] - co[x]).T) <= s]
            lengths.append(len(cube_chain(w, int(x), int(rng.choice(near)))))
        worst[s] = max(lengths)
    assert max(worst.values()) == worst[1 / 4]


def test_jsonl_export(square64, tmp_path):
    w = square64.decomp
    w.write_jsonl(tmp_path / "w.jsonl")
    recs = [json.loads(line) for line in (tmp_path / "w.jsonl").read_text().splitlines()]
    assert len(recs) == len(w)
    assert sum(r["members_count"] for r in recs) == len(square64.domain.interior)
