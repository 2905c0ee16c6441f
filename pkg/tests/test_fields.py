"""Tests for incident fields, Taylor jets, and the Herglotz least-squares fit."""

import math

import numpy as np
import pytest
from scipy.special import comb, j0

from cornerscat.errors import DegenerateJet
from cornerscat.fields import (BesselMode, FieldExpansion, HarmonicPolynomial2D,
                               HerglotzWave, PlaneWave, Superposition, TraceSamples,
                               class_E_membership, helmholtz_residual,
                               herglotz_least_squares, table_eval, taylor_jet,
                               verify_jet_structure)
from cornerscat.geometry import Sector

K = 1.0


def unit(angle):
    return (math.cos(angle), math.sin(angle))


# ---------------------------------------------------------------------------
# evaluation and gradients
# ---------------------------------------------------------------------------
def test_plane_wave_at_origin():
    pw = PlaneWave(k=1.0, direction=(1.0, 0.0))
    assert pw.evaluate((0.0, 0.0)) == pytest.approx(1.0)
    assert pw.gradient((0.0, 0.0)) == pytest.approx([1j, 0.0])


def test_bessel_mode_zero_at_origin():
    bm = BesselMode(k=1.0, order=0)
    assert bm.evaluate((0.0, 0.0)) == pytest.approx(1.0)
    assert bm.gradient((0.0, 0.0)) == pytest.approx([0.0, 0.0])


def test_bessel_m1_gradient_at_origin():
    bm = BesselMode(k=2.0, order=1)
    # J_1(kr) e^{i theta} ~ (k/2)(y1 + i y2)
    assert bm.gradient((0.0, 0.0)) == pytest.approx([1.0, 1.0j])


def test_herglotz_constant_kernel_is_bessel():
    n = 64
    hg = HerglotzWave(k=1.0, kernel=tuple([1 / (2 * math.pi)] * n))
    assert hg.evaluate((0.0, 0.0)) == pytest.approx(1.0)
    x = np.array([0.37, -0.8])
    assert hg.evaluate(x) == pytest.approx(j0(np.linalg.norm(x)), abs=1e-12)


def test_herglotz_gradient_matches_finite_difference():
    rng = np.random.default_rng(0)
    kern = rng.normal(size=32) + 1j * rng.normal(size=32)
    hg = HerglotzWave(k=1.3, kernel=tuple(kern))
    x = np.array([0.2, 0.5])
    g = hg.gradient(x)
    h = 1e-6
    fd = [(hg.evaluate(x + h * np.eye(2)[i]) - hg.evaluate(x - h * np.eye(2)[i])) / (2 * h)
          for i in range(2)]
    assert g == pytest.approx(fd, rel=1e-8)


def test_all_variants_satisfy_helmholtz():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1, 1, size=(12, 2))
    fields = [
        PlaneWave(k=1.0, direction=unit(0.7)),
        PlaneWave(k=2.0, direction=unit(-1.2)),
        BesselMode(k=1.5, order=0),
        BesselMode(k=1.0, order=3),
        BesselMode(k=1.0, order=-2),
        HerglotzWave(k=1.2, kernel=tuple(rng.normal(size=48) + 1j * rng.normal(size=48))),
    ]
    for f in fields:
        assert helmholtz_residual(f, pts) < 1e-8


def test_stencil_residual_coarse_spacing():
    # 5-point second-order stencil at spacing 1e-3: relative residual <= 1e-6
    pw = PlaneWave(k=2.0, direction=unit(0.4))
    pts = np.array([[0.3, 0.4], [-0.5, 0.2]])
    h = 1e-3
    offsets = np.array([[0.0, 0.0], [h, 0], [-h, 0], [0, h], [0, -h]])
    vals = np.stack([pw.evaluate(pts + off) for off in offsets])
    lap = (vals[1] + vals[2] + vals[3] + vals[4] - 4 * vals[0]) / h**2
    rel = np.abs(lap + pw.k**2 * vals[0]) / (pw.k**2 * np.abs(vals[0]))
    assert np.max(rel) <= 1e-6


# ---------------------------------------------------------------------------
# Taylor jets
# ---------------------------------------------------------------------------
def test_plane_wave_jet_closed_form():
    d = unit(0.9)
    k = 1.4
    pw = PlaneWave(k=k, direction=d)
    jet = taylor_jet(pw, (0.0, 0.0), order=6)
    for j in range(7):
        for t in range(j + 1):
            expected = ((1j * k) ** j * comb(j, t) * d[0] ** (j - t) * d[1] ** t
                        / math.factorial(j))
            assert jet.terms[j][t] == pytest.approx(expected, abs=1e-12)


def test_plane_wave_jet_indices():
    pw = PlaneWave(k=1.0, direction=(1.0, 0.0))
    jet = taylor_jet(pw, (0.0, 0.0), order=4)
    assert (jet.N0, jet.N) == (0, 0)
    assert jet.v0 == pytest.approx(1.0)
    # leading gradient = (i, 0): c_plus (1, i) + c_minus (i, 1) with i/2, 1/2
    assert jet.vlead.c_plus == pytest.approx(0.5j)
    assert jet.vlead.c_minus == pytest.approx(0.5)


def test_bessel_m2_jet_indices():
    jet = taylor_jet(BesselMode(k=1.0, order=2), (0.0, 0.0), order=4)
    assert (jet.N0, jet.N) == (2, 1)


def test_bessel_m0_special_case():
    jet = taylor_jet(BesselMode(k=1.0, order=0), (0.0, 0.0), order=6)
    assert (jet.N0, jet.N) == (0, 1)
    assert jet.v0 == pytest.approx(1.0)


def test_sine_superposition_jet():
    # sin(k x1) = (e^{ikx1} - e^{-ikx1}) / 2i: N0 = 1, N = 0
    k = 1.0
    sup = Superposition(
        parts=(PlaneWave(k=k, direction=(1, 0)), PlaneWave(k=k, direction=(-1, 0))),
        weights=(1 / 2j, -1 / 2j))
    jet = taylor_jet(sup, (0.0, 0.0), order=3)
    assert (jet.N0, jet.N) == (1, 0)
    assert jet.v0 == pytest.approx(0.0, abs=1e-14)
    # grad v(0) = (k, 0)
    assert jet.vlead.c_plus == pytest.approx(0.5 * k)
    assert jet.vlead.c_minus == pytest.approx(-0.5j * k)


def test_offcenter_jet_reproduces_field():
    rng = np.random.default_rng(2)
    kern = rng.normal(size=48) + 1j * rng.normal(size=48)
    hg = HerglotzWave(k=1.0, kernel=tuple(kern))
    center = np.array([0.3, 0.2])
    jet = taylor_jet(hg, center, order=6)
    y = np.array([0.02, -0.015])
    series = sum(table_eval(t, y) for t in jet.terms)
    assert series == pytest.approx(hg.evaluate(center + y), abs=1e-12)


def test_offcenter_bessel_jet_via_circle_sampling():
    bm = BesselMode(k=1.0, order=2)
    center = np.array([0.4, -0.1])
    jet = taylor_jet(bm, center, order=5)
    y = np.array([-0.02, 0.03])
    series = sum(table_eval(t, y) for t in jet.terms)
    assert series == pytest.approx(bm.evaluate(center + y), abs=1e-10)


def test_degenerate_jet_raises():
    hg = HerglotzWave(k=1.0, kernel=tuple([0.0] * 16))
    with pytest.raises(DegenerateJet):
        taylor_jet(hg, (0.0, 0.0), order=4)


# ---------------------------------------------------------------------------
# jet structure
# ---------------------------------------------------------------------------
def test_jet_structure_plane_wave():
    jet = taylor_jet(PlaneWave(k=1.0, direction=unit(0.3)), (0.0, 0.0), order=6)
    checks = verify_jet_structure(jet)
    assert all(c.passed for c in checks)
    assert all(c.residual <= 1e-12 for c in checks)


def test_jet_structure_bessel_m2():
    jet = taylor_jet(BesselMode(k=1.0, order=2), (0.0, 0.0), order=6)
    checks = {c.name: c for c in verify_jet_structure(jet)}
    assert jet.N0 == 2 >= jet.N == 1
    assert checks["curl_free"].passed
    assert checks["leading_harmonic"].passed


def test_jet_structure_handbuilt_violation():
    # v1 != 0 with claimed N0 = 0, N = 1, and Lap v3 != 0: the auxiliary
    # vanishing conditions of the special index case must fail
    terms = [np.array([1.0 + 0j]),
             np.array([0.5, 0.0]),              # v1 nonzero
             np.array([0.0, 0.0, 0.0]),
             np.array([1.0, 0.0, 1.0, 0.0])]    # v3 with Lap != 0
    from cornerscat.fields import LeadingGradient
    e = FieldExpansion(center=(0, 0), k=1.0, terms=[t.astype(complex) for t in terms],
                       N0=0, N=1, v0=1.0,
                       vlead=LeadingGradient(degree=1, c_plus=0, c_minus=0, v0=1.0))
    checks = {c.name: c for c in verify_jet_structure(e)}
    assert not checks["index_bracket"].passed


def test_harmonic_polynomial_is_harmonic():
    rng = np.random.default_rng(4)
    for deg in range(7):
        p = HarmonicPolynomial2D(degree=deg,
                                 b_plus=complex(rng.normal(), rng.normal()),
                                 b_minus=complex(rng.normal(), rng.normal()))
        assert p.laplacian_table_norm() <= 1e-12 * max(1.0, abs(p.b_plus) + abs(p.b_minus))


# ---------------------------------------------------------------------------
# exceptional-class membership
# ---------------------------------------------------------------------------
def test_class_E_plane_wave_never():
    s = Sector(vertex=(0, 0), theta_ref=0.0, aperture=math.pi / 2, radius=0.5)
    assert class_E_membership(PlaneWave(k=1.0, direction=(1, 0)), s) is None


def test_class_E_bessel_m2_right_angle():
    s = Sector(vertex=(0, 0), theta_ref=0.0, aperture=math.pi / 2, radius=0.5)
    assert class_E_membership(BesselMode(k=1.0, order=2), s) == 1


def test_class_E_bessel_m3_pi_third():
    s = Sector(vertex=(0, 0), theta_ref=0.0, aperture=math.pi / 3, radius=0.5)
    assert class_E_membership(BesselMode(k=1.0, order=3), s) == 1


def test_class_E_consistency_with_exceptional_angle():
    from cornerscat.geometry import exceptional_angle
    rng = np.random.default_rng(6)
    for _ in range(10):
        m = int(rng.integers(0, 5))
        psi0 = float(rng.uniform(0.3, 3.0))
        s = Sector(vertex=(0, 0), theta_ref=0.0, aperture=psi0, radius=0.5)
        f = BesselMode(k=1.0, order=m)
        jet = taylor_jet(f, (0.0, 0.0), order=8)
        assert class_E_membership(f, s) == exceptional_angle(psi0, jet.N)


# ---------------------------------------------------------------------------
# Herglotz least squares
# ---------------------------------------------------------------------------
def circle_trace(field, radius=1.0, n=96):
    th = 2 * np.pi * (np.arange(n) + 0.5) / n
    pts = radius * np.column_stack([np.cos(th), np.sin(th)])
    nrm = pts / radius
    return TraceSamples(points=pts, values=field.evaluate(pts),
                        ds=np.full(n, 2 * np.pi * radius / n), normals=nrm,
                        normal_values=np.sum(field.gradient(pts) * nrm, axis=1))


def test_herglotz_fit_plane_wave():
    # a plane wave is a delta-kernel limit; the finite grid smears it, so the
    # misfit floor tracks sqrt(lam) under the arc-length-weighted convention
    target = circle_trace(PlaneWave(k=1.0, direction=unit(0.5)))
    fit = herglotz_least_squares(target, k=1.0, n_kernel=64, lam=1e-12)
    assert fit.misfit <= 1e-6
    assert fit.g_norm < 50.0  # bounded despite the delta-kernel limit


def test_herglotz_fit_zero_target():
    target = circle_trace(PlaneWave(k=1.0, direction=(1, 0)))
    target.values = np.zeros_like(target.values)
    target.normal_values = np.zeros_like(target.normal_values)
    fit = herglotz_least_squares(target, k=1.0, n_kernel=32, lam=1e-6)
    assert fit.g_norm <= 1e-12


def test_herglotz_monotone_in_lambda():
    target = circle_trace(BesselMode(k=1.0, order=1))
    fits = [herglotz_least_squares(target, k=1.0, n_kernel=48, lam=lam)
            for lam in (1e-2, 1e-4, 1e-6)]
    misfits = [f.misfit for f in fits]
    gnorms = [f.g_norm for f in fits]
    assert misfits == sorted(misfits, reverse=True)
    assert gnorms == sorted(gnorms)


def test_herglotz_rejects_nonpositive_lambda():
    target = circle_trace(PlaneWave(k=1.0, direction=(1, 0)))
    with pytest.raises(ValueError):
        herglotz_least_squares(target, k=1.0, n_kernel=16, lam=0.0)


def test_jet_structure_random_sweep_small():
    from cornerscat.experiments import jet_structure_sweep
    rep = jet_structure_sweep(n_configs=25, seed=3)
    assert rep["passed"]


def test_jet_structure_herglotz():
    rng = np.random.default_rng(9)
    kern = rng.normal(size=48) + 1j * rng.normal(size=48)
    hg = HerglotzWave(k=1.2, kernel=tuple(kern))
    jet = taylor_jet(hg, (0.15, -0.1), order=6)
    assert all(c.passed for c in verify_jet_structure(jet))
