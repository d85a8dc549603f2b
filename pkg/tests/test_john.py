import math

import numpy as np
import pytest

from johnlimits.errors import GeometryError
from johnlimits.generators import make_domain
from johnlimits.john import (
    JohnProfile,
    check_uniform,
    construct_john_curve,
    construct_john_curves,
    fit_quasihyperbolic_constant,
    quasihyperbolic_distance,
    verify_john_curve,
)
from johnlimits.metric import CurveModel

from conftest import nearest_id


def _ids_on(domain, points):
    return [nearest_id(domain, p) for p in points]


def test_profile_basics():
    p = JohnProfile.power(2.0, 0.5, c=3.0)
    assert p(0.25) == pytest.approx(1.0)
    assert p.validate(np.geomspace(1e-6, 0.2, 50)) == []
    assert JohnProfile.from_dict(p.to_dict()).to_dict() == p.to_dict()
    assert JohnProfile.identity(2.0).with_c(5.0).c == 5.0
    assert JohnProfile.from_table([0.5, 1.0], [0.6, 1.2]).validate(np.linspace(0.01, 2, 50)) == []


@pytest.mark.parametrize(
    "kwargs",
    [dict(kind="identity", c=0.5), dict(kind="power", K=1.0, exponent=1.5), dict(kind="bogus")],
)
def test_profile_rejects_bad_input(kwargs):
    with pytest.raises(GeometryError, match="bad-parameter"):
        JohnProfile(**kwargs)


def test_radial_segment_in_disc_meets_identity_gauge(disc64):
    dom = disc64.domain
    eps = dom.epsilon
    xs = np.arange(round(1 / eps) - 1, -1, -1) * eps
    verts = [nearest_id(dom, (1.0, 0.0), dom.boundary)] + _ids_on(dom, [(x, 0.0) for x in xs])
    curve = CurveModel.from_vertices(dom.space, verts)
    cert = verify_john_curve(dom, curve, JohnProfile.identity(1.0))
    assert cert.margin >= -2 * eps
    assert cert.passed


def test_constant_curve_at_center(disc64):
    dom = disc64.domain
    curve = CurveModel.from_vertices(dom.space, [dom.center])
    prof = JohnProfile.identity(1.0)
    cert = verify_john_curve(dom, curve, prof)
    assert cert.margin == pytest.approx(prof(prof.c * dom.clearance_of([dom.center])[0]))
    assert cert.passed


def test_curve_hugging_the_boundary_fails(square64):
    dom = square64.domain
    eps = dom.epsilon
    n = round(1 / eps)
    along = [(i * eps, eps) for i in range(1, n)]
    up = [(1 - eps, j * eps) for j in range(2, n // 2 + 1)]
    back = [(1 - i * eps, 0.5) for i in range(2, n // 2 + 1)]
    verts = [nearest_id(dom, (0.0, eps), dom.boundary)] + _ids_on(dom, along + up + back)
    curve = CurveModel.from_vertices(dom.space, verts)
    cert = verify_john_curve(dom, curve, JohnProfile.identity(1.0))
    assert not cert.passed
    assert cert.margin <= eps - 0.9


def test_unanchored_curve_is_rejected(square64):
    dom = square64.domain
    curve = CurveModel.from_vertices(dom.space, [int(dom.boundary[0]), int(dom.interior[0])])
    with pytest.raises(GeometryError, match="not-anchored"):
        verify_john_curve(dom, curve, JohnProfile.identity(2.0))


def test_disc_curves_pass_with_c3(disc64):
    dom = disc64.domain
    prof = JohnProfile.identity(3.0)
    curves, failures = construct_john_curves(dom, dom.boundary[::9], prof)
    assert failures == []
    for xi, cv in curves.items():
        assert cv.start == xi and cv.end == dom.center
        assert verify_john_curve(dom, cv, prof).passed
        assert np.all(cv.steps() <= 2 * dom.epsilon + 1e-12)


def test_slit_tip_neighbour_has_a_curve():
    dom = make_domain("slit-disc", 1 / 64)
    xi = nearest_id(dom, (dom.epsilon, 0.0), dom.boundary)
    prof = JohnProfile.identity(4.0)
    assert verify_john_curve(dom, construct_john_curve(dom, xi, prof), prof).passed


def test_cusp_needs_the_square_root_gauge():
    dom = make_domain("cusp", 1 / 128)
    tip = nearest_id(dom, (0.0, 0.0), dom.boundary)
    power = JohnProfile.power(2.0, 0.5, c=2.0)
    assert verify_john_curve(dom, construct_john_curve(dom, tip, power), power).passed
    with pytest.raises(GeometryError, match="no-john-curve"):
        construct_john_curve(dom, tip, JohnProfile.identity(2.0))


def test_restricted_search_respects_the_mask(disc64):
    dom = disc64.domain
    co = dom.space.coords
    upper = co[dom.interior, 1] >= 0
    xi = nearest_id(dom, (1.0, 0.0), dom.boundary)
    cv = construct_john_curve(dom, xi, JohnProfile.identity(2.0), upper)
    inner = cv.vertices[dom.position(cv.vertices) >= 0]
    assert np.all(co[inner, 1] >= 0)


def test_quasihyperbolic_zero_on_diagonal(disc64):
    x = int(disc64.domain.center)
    assert quasihyperbolic_distance(disc64.domain, x, x).value == 0.0


def test_quasihyperbolic_radial_value_is_log_two():
    dom = make_domain("disc", 1 / 128)
    y = nearest_id(dom, (0.5, 0.0), dom.interior)
    res = quasihyperbolic_distance(dom, dom.center, y)
    assert abs(res.value - math.log(2)) <= 0.1 * math.log(2)
    assert res.path[0] == dom.center and res.path[-1] == y


def test_quasihyperbolic_needs_interior_points(disc64):
    with pytest.raises(GeometryError, match="not-interior"):
        quasihyperbolic_distance(disc64.domain, disc64.domain.center, int(disc64.domain.boundary[0]))


def test_fitted_constant_is_the_smallest_that_works():
    k = np.array([6.0, 10.0, 3.0])
    ratios = np.array([2.0, 40.0, 0.5])
    C = fit_quasihyperbolic_constant(k, ratios)
    rhs = lambda c: c * np.maximum(0.0, np.log(c * ratios)) + 2
    assert C > 1
    assert np.all(k <= rhs(C) + 1e-9)
    assert not np.all(k <= rhs(C * (1 - 1e-6)))
    assert fit_quasihyperbolic_constant([1.0], [3.0]) == 1.0


def test_disc_is_uniform_on_random_pairs(disc64):
    dom = disc64.domain
    rng = np.random.default_rng(0)
    pairs = rng.choice(dom.interior, size=(8, 2))
    rep = check_uniform(dom, 10.0, pairs)
    assert rep.pass_fraction == 1.0 and rep.witnesses == []


def test_identical_points_pass_trivially(disc64):
    x = int(disc64.domain.center)
    assert check_uniform(disc64.domain, 1.0, [(x, x)]).pass_fraction == 1.0


def test_slit_straddling_pair_fails():
    dom = make_domain("slit-disc", 1 / 64)
    eps = dom.epsilon
    a = nearest_id(dom, (0.25, eps), dom.interior)
    b = nearest_id(dom, (0.25, -eps), dom.interior)
    rep = check_uniform(dom, 10.0, [(a, b)])
    assert rep.pass_fraction == 0.0
    w = rep.witnesses[0]
    assert (w["x1"], w["x2"]) == (a, b) and w["ratio"] > 10


@pytest.mark.parametrize("name", ["square", "disc", "slit-disc", "cusp", "annulus", "rectangle"])
def test_suggested_profiles_give_every_boundary_sample_a_curve(name):
    dom = make_domain(name, 1 / 32)
    _, failures = construct_john_curves(dom, dom.boundary, JohnProfile.from_dict(dom.meta["john"]))
    assert failures == []
