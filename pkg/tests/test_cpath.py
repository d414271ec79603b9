import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ziglin.cpath import (
    Arc, CPath, PathError, Segment, compose, loop_around, point_at, winding_number,
)

unit_circle = CPath((Arc(0, 1, 0, 2 * math.pi),))


def test_hh_loop_targets():
    p = loop_around(1, 0.2 + 2.5j, 0.4, 1, [])
    assert p.is_closed
    assert winding_number(p, 0.2 + 2.5j) == 1
    assert winding_number(p, 0.2 - 2.5j) == 0


def test_double_loop():
    p = loop_around(0, 4.8 + 0.8j, 0.3, 2, [])
    assert winding_number(p, 4.8 + 0.8j) == 2


def test_clockwise_loop():
    p = loop_around(0, 2, 0.5, -1)
    assert winding_number(p, 2) == -1


@pytest.mark.parametrize("kwargs", [
    dict(base=0, center=1, radius=2),
    dict(base=0, center=1, radius=0),
    dict(base=0, center=3, radius=0.5, turns=0),
    dict(base=0, center=3, radius=0.5, waypoints=[3.2]),
    dict(base=0, center=3, radius=0.5, waypoints=[6]),  # route crosses the disk
])
def test_loop_around_errors(kwargs):
    kwargs.setdefault("turns", 1)
    with pytest.raises(PathError):
        loop_around(**kwargs)


def test_waypoints_route_the_approach():
    direct = loop_around(0, 3, 0.5)
    routed = loop_around(0, 3, 0.5, 1, [1.5 + 2j, 3 + 2j])
    assert winding_number(routed, 3) == 1
    assert routed.point_at(0.5) != direct.point_at(0.5)
    assert winding_number(compose(routed, direct.reverse()), 3) == 0


def test_point_at_examples():
    assert point_at(CPath.polyline([0, 2]), 0.5) == 1
    assert abs(point_at(unit_circle, 0.25) - 1j) < 1e-15
    p = loop_around(0.5j, 2, 0.3, 1)
    assert point_at(p, 0) == 0.5j and abs(point_at(p, 1) - 0.5j) <= 1e-12


def test_point_at_range():
    with pytest.raises(PathError):
        point_at(unit_circle, 1.5)
    with pytest.raises(PathError):
        point_at(unit_circle, -0.1)


def test_compose_examples():
    g = loop_around(0, 2, 0.5)
    gg = compose(g, g.reverse())
    assert gg.is_closed
    for z in (2, 1 + 1j, -3):
        assert winding_number(gg, z) == 0
    h = loop_around(0, -2j, 0.5)
    both = compose(g, h)
    assert winding_number(both, 2) == 1 and winding_number(both, -2j) == 1
    with pytest.raises(PathError):
        compose(CPath.polyline([0, 1]), CPath.polyline([2, 3]))


def test_pieces_must_join():
    with pytest.raises(PathError):
        CPath((Segment(0, 1), Segment(1.1, 2)))


def test_winding_number_examples():
    assert winding_number(unit_circle, 0) == 1
    assert winding_number(unit_circle, 3) == 0
    with pytest.raises(PathError):
        winding_number(unit_circle, 1)
    with pytest.raises(PathError):
        winding_number(CPath.polyline([0, 1]), 3)


def test_empty_path():
    p = CPath.constant(1 + 1j)
    assert p.length == 0 and p.point_at(0.3) == 1 + 1j and p.is_closed


def test_json_round_trip():
    p = loop_around(1, 0.2 + 2.5j, 0.4, 3, [0.5 + 1j])
    q = CPath.from_dict(json.loads(json.dumps(p.to_dict())))
    assert q == p


centers = st.tuples(st.floats(-3, 3), st.floats(-3, 3)).map(lambda t: complex(*t))


@settings(max_examples=150)
@given(centers, centers, st.floats(0.05, 1.0), st.sampled_from([-3, -2, -1, 1, 2, 3]),
       st.lists(centers, max_size=6))
def test_loop_winding_property(base, center, radius, turns, others):
    try:
        p = loop_around(base, center, radius, turns)
    except PathError:
        return
    assert p.is_closed
    assert winding_number(p, center) == turns
    for z in others:
        if p.distance(z) > 2 * radius:
            assert winding_number(p, z) == (turns if abs(z - center) < radius else 0)


@settings(max_examples=100)
@given(centers, centers, st.floats(0.05, 1.0), st.integers(1, 3),
       st.floats(0, 1), st.floats(0, 0.05))
def test_arc_length_lipschitz(base, center, radius, turns, s, delta):
    try:
        p = loop_around(base, center, radius, turns)
    except PathError:
        return
    s2 = min(1.0, s + delta)
    assert abs(p.point_at(s2) - p.point_at(s)) <= (p.length + 1e-9) * (s2 - s) + 1e-12


def test_arc_geometry():
    a = Arc(1j, 2, math.pi / 2, -math.pi)
    assert abs(a.start - 3j) < 1e-15 and abs(a.end - (-1j)) < 1e-14
    assert a.reversed().start == pytest.approx(a.end)
    assert a.length == pytest.approx(2 * math.pi)
    assert abs(a.point(0.5) - (2 + 1j)) < 1e-14
    # derivative consistency
    u, h = 0.3, 1e-6
    assert abs((a.point(u + h) - a.point(u - h)) / (2 * h) - a.derivative(u)) < 1e-7
    assert a.distance(1j) == pytest.approx(2)
    assert a.distance(-5 + 1j) == pytest.approx(abs(-5 + 1j - a.start), rel=1e-12) or \
        a.distance(-5 + 1j) == pytest.approx(abs(-5 + 1j - a.end), rel=1e-12)


def test_breakpoints_and_locate():
    p = CPath.polyline([0, 1, 1 + 3j])
    assert p.breakpoints() == [0.0, 0.25, 1.0]
    assert p.locate(0.5) == (1, pytest.approx(1 / 3))
    assert np.isclose(p.point_at(0.5), 1 + 1j)
