"""Domain catalog, distances, witnesses, and scale selection."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bkern import geometry
from bkern.errors import DomainError, InputError, RangeError
from bkern.geometry import (DomainSpec, ScaleContext, ball_volume_in_domain,
                            cap_fraction, contains, delta_complement, delta_D,
                            delta_many, domain_from_dict, domain_to_dict,
                            fat_witness, point_at_scale, strip_volume_mc,
                            unit_ball_volume)

HL = DomainSpec("half_line")
HS = DomainSpec("half_space", d=2)
BALL = DomainSpec("ball", d=2, radius=1.0)
EXT = DomainSpec("exterior_ball", d=2, radius=1.0)
BOX = DomainSpec("box_2d", d=2, side=2.0)
ALL = (HL, HS, BALL, EXT, BOX)


def test_catalog_constants():
    assert HL.kappa == 0.5 and HS.kappa == 0.5
    assert BALL.kappa == 0.25 and EXT.kappa == 0.25 and BOX.kappa == 0.25
    for dom in ALL:
        assert dom.gamma == 1.0
    assert math.isinf(HL.R0) and math.isinf(HS.R0) and math.isinf(EXT.R0)
    assert BALL.R0 == 2.0
    assert BOX.R0 == 2.0
    assert EXT.A0 == 2.0 and math.isinf(BALL.A0)


def test_unknown_kind():
    with pytest.raises(InputError):
        DomainSpec("wedge")


def test_dimension_rules():
    with pytest.raises(InputError):
        DomainSpec("half_line", d=2)
    with pytest.raises(InputError):
        DomainSpec("box_2d", d=3, side=1.0)
    with pytest.raises(InputError):
        DomainSpec("ball", d=2)  # missing radius


@pytest.mark.parametrize("dom,x,want", [
    (HL, [0.7], 0.7),
    (HS, [3.0, 0.25], 0.25),
    (BALL, [0.6, 0.0], 0.4),
    (BALL, [0.0, 0.0], 1.0),
    (EXT, [0.0, -2.5], 1.5),
    (BOX, [0.3, 1.1], 0.3),
    (BOX, [1.0, 1.0], 1.0),
])
def test_delta_examples(dom, x, want):
    assert delta_D(dom, x) == pytest.approx(want, rel=1e-12)


def test_delta_outside_clamps_to_zero():
    assert delta_D(HL, [-2.0]) == 0.0
    assert delta_D(BALL, [3.0, 0.0]) == 0.0
    assert delta_complement(HL, [-2.0]) == 2.0
    assert delta_complement(EXT, [0.5, 0.0]) == 0.5


def test_contains():
    assert contains(HL, [0.1]) and not contains(HL, [0.0])
    assert contains(HL, [0.0], closed=True)
    assert contains(EXT, [2.0, 0.0]) and not contains(EXT, [0.9, 0.0])


@given(st.sampled_from(["half_line", "half_space", "ball", "exterior_ball",
                        "box_2d"]),
       st.lists(st.floats(-3.0, 3.0), min_size=2, max_size=2),
       st.lists(st.floats(-3.0, 3.0), min_size=2, max_size=2))
@settings(max_examples=120, deadline=None)
def test_delta_is_1_lipschitz(kind, xs, ys):
    dom = {"half_line": HL, "half_space": HS, "ball": BALL,
           "exterior_ball": EXT, "box_2d": BOX}[kind]
    x = np.array(xs[:dom.d])
    y = np.array(ys[:dom.d])
    dx, dy = delta_D(dom, x), delta_D(dom, y)
    assert abs(dx - dy) <= np.linalg.norm(x - y) + 1e-12


def test_delta_many_matches_scalar():
    pts = np.array([[0.2, 0.1], [1.5, -0.3], [0.0, 0.0], [-0.7, 0.7]])
    for dom in (HS, BALL, EXT, BOX):
        vec = delta_many(dom, pts)
        for p, v in zip(pts, vec):
            assert v == pytest.approx(delta_D(dom, p), abs=1e-14)


@pytest.mark.parametrize("dom,x,r", [
    (HL, [0.01], 1.0),
    (HS, [5.0, 0.0], 2.0),
    (BALL, [0.75, 0.0], 0.5),
    (BALL, [1.0, 0.0], 0.9),       # boundary base point
    (EXT, [1.0, 0.0], 0.5),
    (BOX, [0.05, 1.9], 1.0),
])
def test_fat_witness_inequalities(dom, x, r):
    z = fat_witness(dom, x, r)
    x = np.asarray(x, dtype=float)
    # B(z, kappa r) inside D ...
    assert delta_D(dom, z) >= dom.kappa * r - 1e-12
    # ... and inside B(x, r)
    assert np.linalg.norm(z - x) + dom.kappa * r <= r + 1e-12


def test_fat_witness_rejects():
    with pytest.raises(RangeError):
        fat_witness(BALL, [0.5, 0.0], 2.5)  # r >= R0
    with pytest.raises(DomainError):
        fat_witness(HL, [-1.0], 0.5)
    with pytest.raises(InputError):
        fat_witness(HL, [1.0], 0.0)


def test_point_at_scale_keeps_fat_points():
    ctx = ScaleContext(alpha=1.0, t=0.01)
    p = point_at_scale(HS, [0.0, 5.0], ctx)
    assert np.array_equal(p, [0.0, 5.0])


def test_point_at_scale_moves_thin_points():
    ctx = ScaleContext(alpha=1.0, t=1.0)
    p = point_at_scale(HS, [0.0, 1e-4], ctx)
    theta = 1.0
    assert np.linalg.norm(p - np.array([0.0, 1e-4])) <= theta + 1e-12
    assert delta_D(HS, p) >= HS.kappa * theta - 1e-12


def test_point_at_scale_horizon():
    ctx = ScaleContext(alpha=1.0, t=10.0)
    with pytest.raises(RangeError):
        point_at_scale(BALL, [0.0, 0.0], ctx)  # t beyond the horizon


def test_scale_context_validation():
    with pytest.raises(InputError):
        ScaleContext(alpha=2.5, t=1.0)
    with pytest.raises(InputError):
        ScaleContext(alpha=1.0, t=-1.0)
    with pytest.raises(InputError):
        ScaleContext(alpha=1.0, t=1.0, kappa=1.5)


def test_strip_volume_anchor():
    # thin band of the unit disc centered at a boundary point:
    # area = 2 * int_0^0.1 sqrt(1 - h^2) dh
    est, ci = strip_volume_mc(HS, [0.0, 0.0], 1.0, 0.1, 400_000, seed=4)
    want = 0.19966616487222179
    assert abs(est - want) < 3.0 * ci + 5e-4
    assert ci < 5e-3


def test_strip_volume_scales_with_width():
    v1, _ = strip_volume_mc(HS, [0.0, 0.5], 1.0, 0.2, 200_000, seed=1)
    v2, _ = strip_volume_mc(HS, [0.0, 0.5], 1.0, 0.4, 200_000, seed=1)
    assert v2 > v1


def test_ball_volume_in_domain():
    # fully inside
    assert ball_volume_in_domain(HS, [0.0, 2.0], 1.0) == pytest.approx(math.pi)
    # centered on the boundary: half the disc
    assert ball_volume_in_domain(HS, [0.0, 0.0], 1.0) == pytest.approx(
        math.pi / 2.0)
    # volume lower bound from fatness, all catalog entries
    for dom in ALL:
        r = min(0.5, dom.R0 / 2.0)
        x = {"half_line": [0.01], "half_space": [0.0, 0.01],
             "ball": [0.9, 0.0], "exterior_ball": [1.05, 0.0],
             "box_2d": [0.02, 1.0]}[dom.kind]
        z = fat_witness(dom, x, r)
        vol = ball_volume_in_domain(dom, z, dom.kappa * r)
        want = unit_ball_volume(dom.d) * (dom.kappa * r) ** dom.d
        assert vol >= 0.99 * want


def test_cap_fraction_limits():
    assert cap_fraction(2, -1.0) == pytest.approx(1.0)
    assert cap_fraction(2, 0.0) == pytest.approx(0.5)
    assert cap_fraction(2, 1.0) == pytest.approx(0.0)
    assert cap_fraction(1, -0.3) == pytest.approx(0.65)


def test_domain_roundtrip():
    for dom in ALL:
        back = domain_from_dict(domain_to_dict(dom))
        assert back == dom
    with pytest.raises(InputError):
        domain_from_dict({"kind": "ball", "d": 2, "radius": 1.0, "spin": 3})
