import math

import numpy as np
import pytest

from deltaprime import geometry as geo


def charts():
    return [geo.plane(), geo.sphere(1.0), geo.torus(3.0, 1.0),
            geo.bump(1.0, 1.0, 12.0)]


def sample_points(chart, n=24):
    a1, a2 = chart.domain.sample_grid(n)
    S1, S2 = np.meshgrid(a1, a2, indexing="ij")
    return np.column_stack([S1.ravel(), S2.ravel()])


# -- basic jets ---------------------------------------------------------------

def test_plane_jet_trivial():
    jet = geo.geometry_jet(geo.plane(), (0.3, -1.2))
    assert jet.gauss == pytest.approx(0.0, abs=1e-14)
    assert jet.mean == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(jet.metric, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(jet.normal, [0, 0, 1], atol=1e-14)


def test_sphere_jet_umbilic():
    chart = geo.sphere(1.0)
    for s in [(0.7, 0.3), (1.9, 4.0), (2.8, 1.1)]:
        jet = geo.geometry_jet(chart, s)
        assert jet.gauss == pytest.approx(1.0, rel=1e-10)
        assert abs(jet.mean) == pytest.approx(1.0, rel=1e-10)
        assert jet.k1 == pytest.approx(jet.k2, abs=1e-8)
        # normal is radial and unit
        assert np.linalg.norm(jet.normal) == pytest.approx(1.0, abs=1e-12)
        assert abs(jet.normal @ jet.tangents[0]) < 1e-12
        assert abs(jet.normal @ jet.tangents[1]) < 1e-12


def test_torus_outer_equator_closed_forms():
    # K = 1/(r(R+r)) and |M| = (R+2r)/(2r(R+r)) at the outer equator,
    # cross-checked below against a finite-difference jet of the raw map
    R, r = 3.0, 1.0
    chart = geo.torus(R, r)
    jet = geo.geometry_jet(chart, (0.0, 1.234))
    assert jet.gauss == pytest.approx(1.0 / (r * (R + r)), rel=1e-12)
    assert abs(jet.mean) == pytest.approx((R + 2 * r) / (2 * r * (R + r)), rel=1e-12)

    num = geo.NumericalChart("torus-fd", lambda a, b: chart.point(a, b),
                             chart.domain, d0=r)
    fd = geo.geometry_jet(num, (0.0, 1.234))
    assert fd.gauss == pytest.approx(0.25, rel=1e-6)
    assert abs(fd.mean) == pytest.approx(0.625, rel=1e-6)


def test_numerical_chart_agrees_with_symbolic_derivatives():
    chart = geo.bump(1.0, 1.0, 12.0)
    num = geo.NumericalChart("bump-fd", lambda a, b: chart.point(a, b),
                             chart.domain)
    s = (0.8, -0.45)
    exact = chart.partials_at(s, max_order=2)
    approx = num.partials_at(s, max_order=2)
    for key, val in approx.items():
        scale = max(np.abs(exact[key]).max(), 1.0)
        np.testing.assert_allclose(val, exact[key], atol=1e-6 * scale,
                                   err_msg=str(key))


def test_singular_chart_error():
    chart = geo.sphere(1.0)
    with pytest.raises(geo.SingularChartError):
        geo.geometry_jet(chart, (0.0, 0.0))  # pole: tangents degenerate


# -- identities over sample grids --------------------------------------------

@pytest.mark.parametrize("chart", charts(), ids=lambda c: c.name)
def test_curvature_identity(chart):
    # K - M^2 + (k1-k2)^2/4 = 0
    pts = sample_points(chart, 16)
    for s in pts:
        jet = geo.geometry_jet(chart, s)
        resid = jet.gauss - jet.mean**2 + 0.25 * (jet.k1 - jet.k2) ** 2
        assert abs(resid) < 1e-10, s
        assert jet.gauss == pytest.approx(jet.k1 * jet.k2, abs=1e-10)
        assert jet.mean == pytest.approx(0.5 * (jet.k1 + jet.k2), abs=1e-12)
        assert jet.metric_det > 0


@pytest.mark.parametrize("chart", charts(), ids=lambda c: c.name)
def test_layer_metric_identity(chart):
    # det G = g xi^2, and the G eigenvalues relative to g lie in [C-, C+]
    d = 0.25 if chart.name != "sphere" else 0.2
    norms = geo.sup_norms(chart, grid=32)
    C_lo, C_hi = norms.C_pm(d)
    pts = sample_points(chart, 8)
    for s in pts[::3]:
        jet = geo.geometry_jet(chart, s)
        for u in (-d, -0.4 * d, 0.0, 0.7 * d):
            lay = geo.layer_jet(chart, s, u, d)
            rel = abs(lay.G_det - jet.metric_det * lay.xi**2)
            rel /= max(jet.metric_det * lay.xi**2, 1e-300)
            assert rel < 1e-10
            # generalized eigenvalues of (G, g)
            w = np.linalg.eigvalsh(
                np.linalg.solve(_sqrtm2(jet.metric),
                                lay.G @ np.linalg.inv(_sqrtm2(jet.metric))))
            assert w.min() >= C_lo - 1e-9
            assert w.max() <= C_hi + 1e-9


def _sqrtm2(m):
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(w)) @ v.T


def test_layer_jet_values_plane_sphere_torus():
    lay = geo.layer_jet(geo.plane(), (0.5, 0.5), 0.2, 0.5)
    assert lay.xi == pytest.approx(1.0, abs=1e-14)
    assert lay.pot_measure == pytest.approx(0.0, abs=1e-12)
    assert lay.pot_curvature == pytest.approx(0.0, abs=1e-14)
    assert lay.robin_weight == pytest.approx(0.0, abs=1e-14)

    # sphere: xi = (1 - u k)^2 with k = k1 = k2; the chart normal points
    # outward so k = -1/R and xi(u=+0.1) = 1.21, xi(u=-0.1) = 0.81
    chart = geo.sphere(1.0)
    jet = geo.geometry_jet(chart, (1.0, 2.0))
    for u in (0.1, -0.1):
        lay = geo.layer_jet(chart, (1.0, 2.0), u, 0.3)
        assert lay.xi == pytest.approx((1 - u * jet.k1) * (1 - u * jet.k2),
                                       rel=1e-12)
        assert lay.pot_curvature == pytest.approx(0.0, abs=1e-10)
    values = sorted(geo.layer_jet(chart, (1.0, 2.0), u, 0.3).xi
                    for u in (0.1, -0.1))
    assert values == pytest.approx([0.81, 1.21], rel=1e-12)

    # torus: pot_curvature is the direct substitution (K - M^2)/xi^2
    chart = geo.torus(3.0, 1.0)
    jet = geo.geometry_jet(chart, (2.0, 0.7))
    lay = geo.layer_jet(chart, (2.0, 0.7), 0.15, 0.3)
    expected = (jet.gauss - jet.mean**2) / lay.xi**2
    assert lay.pot_curvature == pytest.approx(expected, rel=1e-12)
    assert lay.robin_weight == pytest.approx(
        (jet.mean - jet.gauss * 0.15) / lay.xi, rel=1e-12)


def test_layer_errors():
    chart = geo.sphere(1.0)
    with pytest.raises(geo.LayerWidthError):
        geo.layer_jet(chart, (1.0, 0.0), 0.4, 0.3)   # |u| > d
    with pytest.raises(geo.LayerWidthError):
        # xi = (1 + u)^2 on this chart; u = -1 collapses the layer
        geo.layer_jet(chart, (1.0, 0.0), -1.0, 1.5)


def test_pot_measure_fd_fallback_matches_symbolic():
    chart = geo.torus(3.0, 1.0)
    num = geo.NumericalChart("torus-fd", lambda a, b: chart.point(a, b),
                             chart.domain, d0=1.0)
    s, u, d = (1.1, 0.6), 0.12, 0.3
    sym = geo.layer_jet(chart, s, u, d).pot_measure
    fd = geo.layer_jet(num, s, u, d).pot_measure
    # the fallback nests finite differences, so a few digits is all it owes
    assert fd == pytest.approx(sym, rel=5e-3, abs=2e-4)


# -- chart invariance ---------------------------------------------------------

def test_chart_invariance_affine():
    base = geo.torus(3.0, 1.0)
    A, b = [[0.7, 0.1], [-0.2, 1.3]], (0.4, -0.8)
    other = geo.reparametrized(base, A, b)
    rng = np.random.default_rng(7)
    for _ in range(12):
        t = rng.uniform(-1, 1, size=2)
        s_old = np.asarray(A) @ t + b
        j1 = geo.geometry_jet(base, s_old)
        j2 = geo.geometry_jet(other, t)
        np.testing.assert_allclose(j1.gamma, j2.gamma, atol=1e-12)
        assert j2.gauss == pytest.approx(j1.gauss, rel=1e-6, abs=1e-9)
        assert abs(j2.mean) == pytest.approx(abs(j1.mean), rel=1e-6)


def test_chart_invariance_different_sphere_charts():
    import sympy as sp
    R = 2.0
    polar = geo.sphere(R)
    x, y = sp.symbols("t1 t2", real=True)
    cap = geo.SurfaceChart(
        "sphere-graph", (x, y, sp.sqrt(R**2 - x**2 - y**2)), (x, y),
        geo.ChartDomain("plane", (-1.0, 1.0), (-1.0, 1.0)), params={"R": R})
    rng = np.random.default_rng(3)
    for _ in range(8):
        xy = rng.uniform(-0.9, 0.9, size=2)
        j2 = geo.geometry_jet(cap, xy)
        theta = math.acos(min(1.0, max(-1.0, j2.gamma[2] / R)))
        phi = math.atan2(j2.gamma[1], j2.gamma[0]) % (2 * math.pi)
        j1 = geo.geometry_jet(polar, (theta, phi))
        assert j2.gauss == pytest.approx(j1.gauss, rel=1e-6)
        assert abs(j2.mean) == pytest.approx(abs(j1.mean), rel=1e-6)


# -- sup norms and xi bounds ---------------------------------------------------

def test_sup_norms_sphere_torus_bump():
    norms = geo.sup_norms(geo.sphere(2.0), grid=24)
    assert norms.rho == pytest.approx(2.0, rel=1e-10)
    assert norms.stable

    norms = geo.sup_norms(geo.torus(3.0, 1.0), grid=32)
    # the tube curvature 1/r = 1 dominates; the axis-facing curvature
    # peaks at 1/(R-r) = 0.5
    assert norms.rho == pytest.approx(1.0, rel=1e-10)
    assert max(abs(norms.sup_k1), abs(norms.sup_k2)) == pytest.approx(1.0, rel=1e-10)
    assert norms.stable

    norms = geo.sup_norms(geo.bump(1.0, 1.0, 12.0), grid=48)
    assert np.isfinite(norms.rho) and norms.rho > 0
    assert norms.stable


def test_sup_norm_refinement_invariant():
    for chart in charts():
        a = geo.sup_norms(chart, grid=32)
        b = geo.sup_norms(chart, grid=64)
        for name in ("sup_k1", "sup_k2", "sup_M", "sup_K"):
            va, vb = getattr(a, name), getattr(b, name)
            assert abs(va - vb) <= 0.01 * max(abs(vb), 1e-12), (chart.name, name)


def test_xi_bounds_plane_sphere_torus():
    rep = geo.check_xi_bounds(geo.plane(), 0.5, norms=None)
    assert rep.ok
    assert rep.xi_min == pytest.approx(1.0) and rep.xi_max == pytest.approx(1.0)

    rep = geo.check_xi_bounds(geo.sphere(1.0), 0.3)
    assert rep.ok
    assert rep.xi_min == pytest.approx(0.49, rel=1e-9)
    assert rep.xi_max == pytest.approx(1.69, rel=1e-9)
    assert rep.C_minus == pytest.approx(0.49, rel=1e-12)
    assert rep.C_plus == pytest.approx(1.69, rel=1e-12)

    rep = geo.check_xi_bounds(geo.torus(3.0, 1.0), 0.4)
    assert rep.ok
    assert rep.C_minus < rep.xi_min and rep.xi_max < rep.C_plus


def test_xi_bounds_rejects_wide_layer():
    with pytest.raises(geo.LayerWidthError):
        geo.check_xi_bounds(geo.sphere(1.0), 1.0)


def test_measure_potential_range():
    pr = geo.measure_potential_range(geo.plane(), 0.2)
    assert pr.lo == pytest.approx(0.0, abs=1e-12)
    assert pr.hi == pytest.approx(0.0, abs=1e-12)

    # sphere: curvatures are constant over the chart, so the measure
    # factor has no surface gradient at all
    pr = geo.measure_potential_range(geo.sphere(1.0), 0.1)
    assert max(abs(pr.lo), abs(pr.hi)) < 1e-10

    pr = geo.measure_potential_range(geo.torus(3.0, 1.0), 0.1)
    assert pr.lo < 0 < pr.hi
    assert pr.stable


def test_measure_potential_uniform_in_d():
    # max |pot_measure| / d stays put when d is halved (small-d regime)
    chart = geo.torus(3.0, 1.0)
    a = geo.measure_potential_range(chart, 0.08)
    b = geo.measure_potential_range(chart, 0.04)
    for lo_hi in ("lo", "hi"):
        va, vb = getattr(a, lo_hi), getattr(b, lo_hi)
        assert abs(va - vb) <= 0.10 * max(abs(va), abs(vb)), (va, vb)


def test_builtin_chart_factory():
    chart = geo.builtin_chart("sphere", R=2.5)
    assert chart.params["R"] == 2.5
    with pytest.raises(geo.ChartError):
        geo.builtin_chart("helicoid")
