import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polywrithe.curves import (Arc, HelixArc, Line, ParametricCurve,
                               PiecewiseCurve, PolygonalCurve, circle,
                               closed_helix, closed_helix_writhe,
                               default_derivative_bounds, ellipse,
                               fourier_curve, inscribe,
                               inscribe_with_max_edge, make_curve,
                               max_edge_length, parse_generator_spec,
                               read_polygon, read_samples, round_corners,
                               tantrix, torus_knot, write_polygon,
                               write_samples)
from polywrithe.errors import DomainError
from polywrithe.geometry import angle_between, signed_polygon_area
from polywrithe.writhe import (tantrix_area, writhe_piecewise_quadrature,
                               writhe_polygonal, writhe_smooth_quadrature)

from oracles import random_rotation, random_skew_polygon

HELIX = closed_helix(3, 1.0, 0.33)


# --- closed helix ------------------------------------------------------------

def test_closed_helix_is_closed_and_unit_speed():
    HELIX.check_closed(order=1)
    t = np.linspace(0, HELIX.period, 4001)
    speed = np.linalg.norm(HELIX.derivative(t, 1), axis=1)
    assert np.allclose(speed, 1.0, atol=1e-12)
    HELIX.check_regular()


def test_closed_helix_length():
    assert HELIX.period == pytest.approx(50.257, abs=1e-3)
    assert HELIX.arclength() == pytest.approx(HELIX.period, rel=1e-12)


def test_helix_section_derivative_bounds():
    a, b = HELIX.helix_interval
    t = np.linspace(a, b, 3001)[1:-1]
    for k in (2, 3):
        norms = np.linalg.norm(HELIX.derivative(t, k), axis=1)
        assert np.max(norms) <= 1.0
        assert np.allclose(norms, math.cos(0.33) ** k, rtol=1e-12)


def test_closed_helix_junctions_c1():
    # The C^1 junction tolerance is enforced by PiecewiseCurve itself.
    for a, b in HELIX.smooth_intervals():
        left = HELIX.tangent(np.array([b - 1e-13]))
        right = HELIX.tangent(np.array([b + 1e-13]))
        assert float(angle_between(left, right)[0]) < 1e-10


def test_closed_helix_writhe_quadrature():
    assert writhe_smooth_quadrature(HELIX) == pytest.approx(
        3 * (1 - math.sin(0.33)), abs=1e-5)


def test_closed_helix_exact_value():
    assert closed_helix_writhe(3, 0.33) == pytest.approx(2.0278709, abs=1e-7)


def test_steep_single_turn_writhe_tends_to_zero():
    c = closed_helix(1, 1.0, 1.5)
    w = writhe_smooth_quadrature(c)
    assert w == pytest.approx(1 - math.sin(1.5), abs=1e-6)
    assert abs(w) < 3e-3


@pytest.mark.parametrize("args", [(0, 1, 0.3), (2.5, 1, 0.3), (3, -1, 0.3),
                                  (3, 1, 0.0), (3, 1, math.pi / 2)])
def test_closed_helix_rejects_bad_parameters(args):
    with pytest.raises(DomainError):
        closed_helix(*args)


def test_closure_is_planar():
    a, b = HELIX.helix_interval
    t = np.linspace(b, HELIX.period, 500)
    assert np.allclose(HELIX.position(t)[:, 0], 1.0, atol=1e-12)


# --- other generators ---------------------------------------------------------

@pytest.mark.parametrize("curve", [
    circle(2.0), ellipse(2.0, 1.0), torus_knot(2, 3),
    fourier_curve([[[1, 0, 0], [0, 1, 0]], [[0, 0, 0.3], [0.2, 0, 0]]]),
], ids=["circle", "ellipse", "torus-knot", "fourier"])
def test_analytic_derivatives_match_differences(curve):
    t = np.linspace(0.1, curve.period - 0.1, 7)
    h = 1e-5
    for k in (1, 2, 3, 4):
        num = (curve.derivative(t + h, k - 1)
               - curve.derivative(t - h, k - 1)) / (2 * h)
        assert np.allclose(curve.derivative(t, k), num, atol=1e-5, rtol=1e-6)
    curve.check_closed()


def test_finite_difference_fallback_matches_analytic():
    ref = torus_knot(2, 3)
    fd = ParametricCurve.from_position(ref.position, ref.period)
    assert not fd.analytic
    t = np.linspace(0, ref.period, 11)
    for k, tol in ((1, 1e-8), (2, 1e-6), (3, 1e-4), (4, 1e-2)):
        err = np.max(np.abs(fd.derivative(t, k) - ref.derivative(t, k)))
        scale = np.max(np.abs(ref.derivative(t, k)))
        assert err < tol * scale, k


def test_circle_writhe_is_zero():
    assert abs(writhe_smooth_quadrature(circle(1.5))) < 1e-12


def test_transformed_and_reversed_curves_keep_writhe():
    c = torus_knot(2, 3)
    w = writhe_smooth_quadrature(c)
    q = random_rotation(np.random.default_rng(5))
    assert writhe_smooth_quadrature(
        c.transformed(q, shift=[1, 2, 3], scale=2.5)) == pytest.approx(
            w, abs=1e-8)
    assert writhe_smooth_quadrature(c.reversed()) == pytest.approx(w, abs=1e-8)
    mirror = np.diag([1.0, 1.0, -1.0])
    assert writhe_smooth_quadrature(c.transformed(mirror)) == pytest.approx(
        -w, abs=1e-8)


def test_reparametrization_keeps_writhe():
    c = torus_knot(2, 3)
    w = writhe_smooth_quadrature(c)
    r = c.reparametrized(amplitude=0.3, harmonic=2)
    assert writhe_smooth_quadrature(r) == pytest.approx(w, abs=1e-8)


# --- polygons and inscription ---------------------------------------------------

def test_circle_square_inscription():
    c = circle(1.0)
    p = inscribe(c, n=4)
    assert np.allclose(p.edge_lengths(), math.sqrt(2), atol=1e-14)
    assert np.allclose(np.linalg.norm(p.vertices, axis=1), 1.0, atol=1e-15)


def test_inscribe_reads_back_exact_positions():
    t = np.sort(np.random.default_rng(1).uniform(0, HELIX.period, 40))
    p = inscribe(HELIX, params=t)
    assert np.array_equal(p.vertices, HELIX.position(t))
    assert np.array_equal(p.params, t)


def test_inscribe_1000_edge_length():
    p = inscribe(HELIX, n=1000)
    assert max_edge_length(p) == pytest.approx(0.051, rel=0.03)


@pytest.mark.parametrize("curve", [HELIX, torus_knot(2, 3), ellipse(3, 1)],
                         ids=["helix", "torus", "ellipse"])
def test_refinement_reduces_max_edge(curve):
    xs = [max_edge_length(inscribe(curve, n=n)) for n in (50, 100, 200, 400)]
    assert all(b < a for a, b in zip(xs, xs[1:]))


@pytest.mark.parametrize("n,x", [(100, 0.506), (250, 0.203), (500, 0.101),
                                 (1000, 0.051)])
def test_inscribe_with_max_edge_hits_target(n, x):
    p = inscribe_with_max_edge(HELIX, n, x)
    assert p.n == n
    assert max_edge_length(p) == pytest.approx(x, rel=1e-12)
    assert np.array_equal(p.vertices, HELIX.position(p.params))


def test_inscribe_with_max_edge_too_small():
    with pytest.raises(DomainError):
        inscribe_with_max_edge(HELIX, 100, 0.3)


@pytest.mark.parametrize("params", [[0, 1, 1, 2], [0, 2, 1, 3], [0, 1]])
def test_inscribe_rejects_bad_parameters(params):
    with pytest.raises(DomainError):
        inscribe(HELIX, params=np.array(params, dtype=float))


def test_unit_square_edge_length():
    sq = PolygonalCurve([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]])
    assert max_edge_length(sq) == 1.0


def test_polygon_rejects_repeated_vertex():
    with pytest.raises(DomainError):
        PolygonalCurve([[0, 0, 0], [1, 0, 0], [1, 0, 0], [0, 1, 0]])


def test_simplicity_check():
    bowtie = PolygonalCurve([[0, 0, 0], [1, 1, 0], [1, 0, 0], [0, 1, 0]])
    assert bowtie.intersecting_pairs()
    with pytest.raises(DomainError):
        bowtie.check_simple()
    PolygonalCurve([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]]).check_simple()


@settings(max_examples=30)
@given(st.integers(3, 40), st.integers(0, 2 ** 32 - 1))
def test_max_edge_at_least_mean(n, seed):
    v = np.random.default_rng(seed).normal(size=(n, 3))
    p = PolygonalCurve(v)
    assert max_edge_length(p) >= np.mean(p.edge_lengths())


# --- corner rounding --------------------------------------------------------------

def test_rounded_planar_convex_polygon_has_zero_writhe():
    hexagon = PolygonalCurve([[math.cos(a), math.sin(a), 0.0] for a in
                              np.linspace(0, 2 * math.pi, 6, endpoint=False)])
    c = round_corners(hexagon, 0.1)
    assert abs(writhe_piecewise_quadrature(c)) < 1e-12
    assert np.allclose(c.position(np.linspace(0, c.period, 50))[:, 2], 0)


def test_rounded_hexagon_writhe_equals_polygon():
    rng = np.random.default_rng(7)
    p = random_skew_polygon(rng, 6)
    c = round_corners(p, 0.05 * float(np.min(p.edge_lengths())))
    assert writhe_piecewise_quadrature(c) == pytest.approx(
        writhe_polygonal(p), abs=1e-6)


def test_rounded_junction_tangents_match_edges():
    p = random_skew_polygon(np.random.default_rng(11), 7)
    c = round_corners(p, 0.1)
    edge_dirs = p.edge_tangents()
    for seg, (a, b) in zip(c.segments, [c.segment_interval(i)
                                        for i in range(len(c.segments))]):
        if seg.is_line:
            d = c.tangent(np.array([a, b]))
            best = np.max(edge_dirs @ d[0])
            assert best == pytest.approx(1.0, abs=1e-12)
            assert np.allclose(d[0], d[1], atol=1e-12)
    for a, b in c.smooth_intervals():
        left, right = c.tangent(np.array([b - 1e-12, b + 1e-12]))
        assert float(angle_between(left, right)) < 1e-10


def test_rounding_converges_to_polygon():
    p = random_skew_polygon(np.random.default_rng(13), 6)
    dists = []
    for r in (0.1, 0.01, 0.001):
        c = round_corners(p, r)
        pts = c.position(np.linspace(0, c.period, 2000, endpoint=False))
        # Distance from each vertex to the rounded curve.
        d = np.min(np.linalg.norm(pts[None, :, :] - p.vertices[:, None, :],
                                  axis=2), axis=1)
        dists.append(np.max(d))
    assert dists[0] > dists[1] > dists[2]


def test_rounding_radius_too_large():
    p = PolygonalCurve([[0, 0, 0], [1, 0, 0], [1, 1, 0.3], [0, 1, 0]])
    with pytest.raises(DomainError):
        round_corners(p, 0.6)


# --- tantrix -----------------------------------------------------------------------

def test_circle_tantrix_is_great_circle():
    t = tantrix(circle(2.0), samples=256)
    assert np.allclose(np.linalg.norm(t.points, axis=1), 1, atol=1e-12)
    assert np.allclose(t.points[:, 2], 0, atol=1e-15)
    assert abs(abs(tantrix_area(t)) - 2 * math.pi) < 1e-12


def test_helix_tantrix_area():
    expected = 2 * math.pi * 3 * (1 - math.sin(0.33)) + 2 * math.pi
    errs = []
    for k in (10000, 20000):
        diff = (tantrix_area(tantrix(HELIX, samples=k)) - expected) \
            % (4 * math.pi)
        errs.append(min(diff, 4 * math.pi - diff))
    # Sampled loop: the geodesic polygon error falls like 1/k^2.
    assert errs[1] < 1e-5
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_polygon_tantrix_closes():
    quad = PolygonalCurve([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])
    t = tantrix(quad)
    assert t.kind == "polygonal"
    assert t.points.shape == (4, 3)
    loop = t.loop(arc_samples=5)
    assert loop.shape == (16, 3)
    assert np.allclose(np.linalg.norm(loop, axis=1), 1, atol=1e-12)
    # The chain ends on the arc leading back to the first edge tangent.
    last_step = float(angle_between(loop[-1], t.points[0]))
    first_arc = float(angle_between(t.points[-1], t.points[0]))
    assert last_step == pytest.approx(first_arc / 4, rel=1e-10)


def test_polygon_tantrix_rejects_reversal():
    p = PolygonalCurve([[0, 0, 0], [2, 0, 0], [1, 0, 0], [1, 1, 1]])
    with pytest.raises(DomainError):
        tantrix(p)


# --- generators and files ------------------------------------------------------

def test_generator_spec_round_trip():
    c = make_curve("closed-helix:turns=2,pitch=0.4")
    assert c.spec["turns"] == 2 and c.spec["pitch"] == 0.4
    c2 = make_curve(c.generator)
    assert c2.period == c.period
    assert parse_generator_spec("circle") == ("circle", {})


def test_unknown_generator():
    with pytest.raises(DomainError, match="unknown generator"):
        make_curve("spiral")


def test_default_bounds_for_reference_helix():
    assert default_derivative_bounds(HELIX) == (1.0, 1.0, 1.0, 1.0)
    assert default_derivative_bounds(torus_knot()) is None


def test_polygon_file_round_trip(tmp_path):
    p = inscribe(HELIX, n=64)
    path = tmp_path / "p.txt"
    write_polygon(path, p, generator="closed-helix")
    q, meta = read_polygon(path)
    assert np.array_equal(q.vertices, p.vertices)
    assert np.array_equal(q.params, p.params)
    assert meta["generator"] == "closed-helix"


def test_plain_polygon_file(tmp_path):
    path = tmp_path / "plain.txt"
    path.write_text("# a comment\n0 0 0\n1 0 0\n\n0 1 0.5\n")
    p, meta = read_polygon(path)
    assert p.n == 3 and p.params is None


def test_bad_polygon_file(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("0 0 0\n1 0\n")
    with pytest.raises(DomainError):
        read_polygon(path)


def test_samples_file(tmp_path):
    path = tmp_path / "s.txt"
    write_samples(path, HELIX, samples=100)
    t, pos, meta = read_samples(path)
    assert np.array_equal(pos, HELIX.position(t))
    assert meta["derivatives"] == "analytic"
