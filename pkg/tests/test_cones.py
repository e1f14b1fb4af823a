from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tclab.cones import (
    ConeError,
    ConeSpec,
    check_ef_conditions,
    classify,
    dual_boundary_distance,
    extreme_rays_dual,
    friction_constant,
    in_dual_cone,
    in_solvency_cone,
    in_solvency_cone_by_rays,
    interior_margin,
    interior_witness,
    liquidation_bound_alpha,
    normal_cone_constant,
    stress_score,
)
from tclab.numeric import InputError


def lam_upper(d, exact=False):
    one = F(1) if exact else 1
    return [[one if i < j else 0 * one for j in range(d)] for i in range(d)]


@pytest.mark.parametrize("exact", [False, True])
def test_membership_examples(exact):
    cone = ConeSpec.uniform(2, F(1, 10) if exact else 0.1, exact=exact)
    ok, cert = in_solvency_cone(cone, [F(11, 10), -1] if exact else [1.1, -1])
    assert ok
    assert cert.a[(0, 1)] == pytest.approx(1) and max(cert.b) == pytest.approx(0)
    ok, cert = in_solvency_cone(cone, [-1, 1])
    assert not ok
    z = np.asarray(cert.z, dtype=float)
    assert z == pytest.approx([1, 1 / 1.1])
    assert in_dual_cone(cone, cert.z)


def test_cost_validation():
    with pytest.raises(ConeError, match="diagonal"):
        ConeSpec([[0.1, 0], [0, 0]])
    with pytest.raises(ConeError, match="negative"):
        ConeSpec([[0, -0.1], [0, 0]])
    with pytest.raises(ConeError, match="triangle"):
        ConeSpec([[0, 0, 1], [0, 0, 0], [0, 0, 0]], exact=True)
    with pytest.raises(InputError):
        in_solvency_cone(ConeSpec.uniform(2, 0.1), [1, 2, 3])


def test_margin_examples():
    d = 4
    lam = [[0 if i == j else (0 if (i, j) == (0, 1) else 1) for j in range(d)] for i in range(d)]
    cone = ConeSpec(lam, exact=True)
    u = [F(3, 2), 1, 1, 1]
    assert interior_margin(cone, u) == F(1, 2)
    assert classify(cone, u) == "interior"
    stress = ConeSpec(lam_upper(5, exact=True), exact=True)
    assert interior_margin(stress, [1] * 5) == 0
    assert classify(stress, [1] * 5) == "boundary"
    assert classify(stress, [2, 1, 1, 1, 1]) == "exterior"


def test_single_asset_margin():
    cone = ConeSpec([[0]])
    assert interior_margin(cone, [2.0]) == 2.0
    assert classify(cone, [-1.0]) == "exterior"


def test_distance_normal_constant_alpha():
    eps = F(1, 10)
    cone = ConeSpec.uniform(2, eps, exact=True)
    ones = [F(1), F(1)]
    assert dual_boundary_distance(cone, ones) == eps / (2 + eps)
    assert normal_cone_constant(cone, ones) == 4 * (2 + eps) / eps
    assert liquidation_bound_alpha(cone, ones) == 8 * ((2 + eps) / eps) ** 2
    for d in (3, 4):
        c = ConeSpec.uniform(d, eps, exact=True)
        assert normal_cone_constant(c, [1] * d) == 4 * (2 + eps) / eps
    assert friction_constant(cone) == (2 + eps) / eps


def test_precondition_errors():
    frictionless = ConeSpec.uniform(2, 0)
    assert interior_witness(frictionless) is None
    with pytest.raises(ConeError):
        dual_boundary_distance(frictionless, [1, 1])
    cone = ConeSpec.uniform(2, 0.1)
    with pytest.raises(ConeError):
        normal_cone_constant(cone, [1, 2])
    with pytest.raises(ConeError):
        liquidation_bound_alpha(cone, [0, 1])
    with pytest.raises(ConeError):
        extreme_rays_dual(ConeSpec.uniform(9, 0.1))


def test_interior_witness_search():
    # 1 is on the boundary, but int K' is nonempty
    cone = ConeSpec(lam_upper(3))
    w = interior_witness(cone)
    assert w is not None and interior_margin(cone, w) > 0


def test_rays_two_assets():
    rays = extreme_rays_dual(ConeSpec.uniform(2, F(1, 10), exact=True))
    got = {tuple(r) for r in rays}
    assert got == {(F(1), F(10, 11)), (F(10, 11), F(1))}


def test_ef_report_on_stress_costs():
    for d in (4, 8):
        rep = check_ef_conditions(ConeSpec(lam_upper(d)))
        assert rep["condition_5"] and not rep["condition_2"]
        assert rep["delta_one"] == 0
    scores = [stress_score(ConeSpec(lam_upper(d))) for d in range(4, 17, 2)]
    assert all(a < b for a, b in zip(scores, scores[1:]))


def test_stress_score_decomposition_is_tight_for_two_assets():
    cone = ConeSpec.uniform(2, 1, exact=True)
    # y2 = (a, b) in K' and y1 = (a + 1, b) in K' force (a + 1)/2 <= b <= 2a, so a >= 1/3
    assert stress_score(cone) == F(4, 3)


@st.composite
def cones_and_points(draw):
    d = draw(st.integers(1, 4))
    lam = [[0 if i == j else draw(st.integers(0, 8)) for j in range(d)] for i in range(d)]
    L = [[F(1) + F(lam[i][j], 4) for j in range(d)] for i in range(d)]
    for k in range(d):
        for i in range(d):
            for j in range(d):
                L[i][j] = min(L[i][j], L[i][k] * L[k][j])
    x = [F(draw(st.integers(-8, 8)), 4) for _ in range(d)]
    return ConeSpec([[v - 1 for v in row] for row in L], exact=True), x


@settings(max_examples=60, deadline=None)
@given(cones_and_points())
def test_membership_matches_rays(case):
    cone, x = case
    ok, cert = in_solvency_cone(cone, x)
    assert ok == in_solvency_cone_by_rays(cone, x)
    if not ok:
        assert in_dual_cone(cone, cert.z) and cert.z.dot(np.array(x, dtype=object)) < 0
