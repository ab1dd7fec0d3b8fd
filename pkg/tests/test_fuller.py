import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from polywrithe.curves import circle, closed_helix, inscribe, torus_knot
from polywrithe.errors import DomainError, HypothesisError
from polywrithe.fuller import (RibbonSampling, check_homotopy,
                               check_hypotheses, delta_writhe_polygonal,
                               delta_writhe_smooth, ribbon_area)
from polywrithe.writhe import writhe_polygonal, writhe_smooth_quadrature

from oracles import (fourier_direction, latitude, ribbon_area_swept,
                     theta_antiderivative)

TWO_PI = 2 * math.pi


def _random_ribbon(rng):
    base = rng.normal(size=(3, 2, 3)) * np.array([1, 0.3, 0.15])[:, None, None]
    base[0, 0] += np.array([0, 0, 2.0])
    pert = base + rng.normal(size=(3, 2, 3)) * 0.2
    return fourier_direction(base), fourier_direction(pert)


# --- ribbon areas --------------------------------------------------------------

def test_identical_curves_have_zero_area():
    f = latitude(0.7)
    assert ribbon_area(RibbonSampling.periodic(f, f, TWO_PI, 64)) == 0.0


@pytest.mark.parametrize("p0,p1", [(0.3, 0.9), (0.9, 0.3), (0.2, 2.5),
                                   (1.2, 1.3)])
def test_latitude_circles_cap_difference(p0, p1):
    r = RibbonSampling.periodic(latitude(p0), latitude(p1), TWO_PI, 256)
    assert ribbon_area(r) == pytest.approx(
        TWO_PI * (math.cos(p0) - math.cos(p1)), abs=1e-12)


def test_random_ribbon_matches_swept_area(rng):
    f0, f1 = _random_ribbon(rng)
    r = RibbonSampling.periodic(f0, f1, TWO_PI, 512)
    assert ribbon_area(r) == pytest.approx(ribbon_area_swept(f0, f1),
                                           abs=1e-10)


def test_ribbon_swap_antisymmetry(rng):
    f0, f1 = _random_ribbon(rng)
    a = ribbon_area(RibbonSampling.periodic(f0, f1, TWO_PI, 512))
    b = ribbon_area(RibbonSampling.periodic(f1, f0, TWO_PI, 512))
    assert a == pytest.approx(-b, abs=1e-13)


def test_differenced_derivatives_converge(rng):
    f0, f1 = _random_ribbon(rng)
    exact = ribbon_area(RibbonSampling.periodic(f0, f1, TWO_PI, 512))
    errs = []
    for m in (128, 256):
        t = np.arange(m) * TWO_PI / m
        r = RibbonSampling(t, f0(t)[0], f1(t)[0], period=TWO_PI)
        errs.append(abs(ribbon_area(r) - exact))
    assert errs[1] < 1e-4
    assert errs[0] / errs[1] > 3.5


def test_open_ribbon_with_gauss_weights():
    # A quarter of the latitude ribbon.
    r = RibbonSampling.gauss(latitude(0.3), latitude(0.9), 0.0, math.pi / 2,
                             24)
    assert ribbon_area(r) == pytest.approx(
        0.25 * TWO_PI * (math.cos(0.3) - math.cos(0.9)), abs=1e-13)


def test_antipodal_samples_rejected():
    t = np.linspace(0, 1, 5)
    T0 = np.tile([0, 0, 1.0], (5, 1))
    T1 = T0.copy()
    T1[3] = [0, 0, -1.0]
    with pytest.raises(DomainError, match="antipodal"):
        RibbonSampling(t, T0, T1)


def test_non_unit_samples_rejected():
    t = np.linspace(0, 1, 3)
    with pytest.raises(DomainError):
        RibbonSampling(t, np.ones((3, 3)), np.ones((3, 3)))


@pytest.mark.parametrize("a", np.linspace(-0.95, 0.95, 7))
def test_theta_antiderivative_closed_form(a):
    val, _ = integrate.quad(
        lambda th: math.cos(th) * (1 + a * math.sin(2 * th)) ** -1.5,
        0, math.pi / 2, epsabs=1e-13, epsrel=1e-13)
    closed = theta_antiderivative(math.pi / 2, a) - theta_antiderivative(0, a)
    assert closed == pytest.approx(1 / (1 + a), rel=1e-12)
    assert val == pytest.approx(closed, abs=1e-10)


# --- smooth writhe differences ---------------------------------------------------

def test_delta_smooth_identity_is_zero():
    c = closed_helix(3, 1.0, 0.33)
    assert abs(delta_writhe_smooth(c, c)) < 1e-14


def test_delta_smooth_helix_pitch_change():
    x0 = closed_helix(3, 1.0, 0.33)
    x1 = closed_helix(3, 1.0, 0.40)
    d = delta_writhe_smooth(x0, x1)
    assert d == pytest.approx(3 * (math.sin(0.33) - math.sin(0.40)),
                              abs=1e-9)
    direct = writhe_smooth_quadrature(x1) - writhe_smooth_quadrature(x0)
    assert d == pytest.approx(direct, abs=1e-4)


def test_delta_smooth_additivity():
    xs = [closed_helix(3, 1.0, p) for p in (0.33, 0.36, 0.40)]
    d01 = delta_writhe_smooth(xs[0], xs[1])
    d12 = delta_writhe_smooth(xs[1], xs[2])
    d02 = delta_writhe_smooth(xs[0], xs[2])
    assert d01 + d12 == pytest.approx(d02, abs=1e-10)


def test_delta_smooth_torus_knot_scaling():
    x0 = torus_knot(2, 3, 2.0, 1.0)
    x1 = torus_knot(2, 3, 2.0, 0.8)
    direct = writhe_smooth_quadrature(x1) - writhe_smooth_quadrature(x0)
    assert delta_writhe_smooth(x0, x1) == pytest.approx(direct, abs=1e-8)


def test_delta_smooth_rejects_antipodal_homotopy():
    x0 = circle(1.0)
    x1 = circle(1.0).reversed()
    assert not check_homotopy(x0, x1).passed
    with pytest.raises(HypothesisError):
        delta_writhe_smooth(x0, x1)


def test_delta_smooth_mismatched_pieces():
    with pytest.raises(DomainError):
        delta_writhe_smooth(circle(1.0), closed_helix(3, 1.0, 0.33))


# --- polygonal writhe differences -------------------------------------------------

def test_regular_polygon_in_circle_zero():
    c = circle(1.0)
    d = delta_writhe_polygonal(c, inscribe(c, n=12))
    assert abs(d.total) < 1e-14
    assert np.max(np.abs(d.decomposition.terms)) < 1e-13


def test_helix_1000_delta_matches_table_error():
    c = closed_helix(3, 1.0, 0.33)
    p = inscribe(c, n=1000)
    d = delta_writhe_polygonal(c, p)
    direct = writhe_polygonal(p) - writhe_smooth_quadrature(c)
    assert d.total == pytest.approx(direct, abs=1e-6)
    assert abs(d.total) == pytest.approx(0.00024, abs=2e-5)
    assert np.all(np.isfinite(d.decomposition.region))
    assert np.all(np.abs(d.decomposition.triangle) < TWO_PI)


def test_torus_knot_delta_matches_direct():
    c = torus_knot(2, 3)
    p = inscribe(c, n=300)
    d = delta_writhe_polygonal(c, p)
    direct = writhe_polygonal(p) - writhe_smooth_quadrature(c)
    assert d.total == pytest.approx(direct, abs=1e-5)


def test_samples_per_span_refinement_order():
    c = torus_knot(2, 3)
    p = inscribe(c, n=200)
    vals = [delta_writhe_polygonal(c, p, k, check=False).total
            for k in (4, 8, 16, 64)]
    e1, e2 = vals[0] - vals[3], vals[1] - vals[3]
    assert abs(e2) < abs(e1)
    assert e1 / e2 == pytest.approx(4.0, rel=0.1)


def test_square_in_circle_fails_corner_hypothesis():
    c = circle(1.0)
    p = inscribe(c, n=4)
    rep = check_hypotheses(c, p)
    item = rep.item("corner angles > pi/2")
    assert not item.passed
    assert rep.min_corner_angle == pytest.approx(math.pi / 2, abs=1e-12)
    with pytest.raises(HypothesisError, match="corner"):
        delta_writhe_polygonal(c, p)


def test_coarse_helix_flags_edge_length():
    from polywrithe.bounds import DerivativeBounds
    c = closed_helix(3, 1.0, 0.33)
    p = inscribe(c, n=100)
    rep = check_hypotheses(c, p, bounds=DerivativeBounds(1, 1, 1, 1))
    assert not rep.item("1/x > 5*B2").passed
    assert rep.item("corner angles > pi/2").passed


def test_fine_helix_tangent_angle_lemma():
    from polywrithe.bounds import DerivativeBounds
    c = closed_helix(3, 1.0, 0.33)
    p = inscribe(c, n=1000)
    rep = check_hypotheses(c, p, bounds=DerivativeBounds(1, 1, 1, 1))
    assert rep.passed
    lemma = rep.item("tangent angle < 0.51005*K*x")
    assert lemma.value < lemma.threshold


def test_delta_needs_parameters():
    from polywrithe.curves import PolygonalCurve
    c = circle(1.0)
    p = PolygonalCurve(inscribe(c, n=8).vertices)
    with pytest.raises(DomainError):
        delta_writhe_polygonal(c, p)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_polygonal_delta_consistency_random_torus(seed):
    rng = np.random.default_rng(seed)
    c = torus_knot(2, 3, 2.0, float(rng.uniform(0.6, 1.2)))
    t = np.sort(rng.uniform(0, 1, 240) * 0.3 / 240
                + np.arange(240) * c.period / 240)
    p = inscribe(c, params=t)
    d = delta_writhe_polygonal(c, p, check=False)
    direct = writhe_polygonal(p, check=False) - writhe_smooth_quadrature(c)
    assert d.total == pytest.approx(direct, abs=1e-5)
