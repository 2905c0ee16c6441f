"""Tests for the volume-integral forward solver, far fields, and identities."""

import math

import numpy as np
import pytest
from scipy.special import hankel1

from cornerscat.discref import disc_farfield_series
from cornerscat.errors import (EllipticityViolated, ResolutionTooCoarse,
                               SupportViolated, TestFieldInvalid)
from cornerscat.fields import PlaneWave
from cornerscat.forward import (_kernel_hats, as_field_handle, assemble_medium,
                                far_field, farfield_l2_diff, make_disc_medium,
                                optical_theorem_balance, solve_scattering,
                                transmission_identity_residual)
from cornerscat.geometry import ConvexPolygon
from cornerscat.grids import CoefficientGrid, Grid2D


# ---------------------------------------------------------------------------
# kernel correctness
# ---------------------------------------------------------------------------
def test_kernel_convolution_matches_direct_sum():
    grid = Grid2D(side=8.0, n=48)
    k, R = 2.0, 3.0
    phi_hat, _, _ = _kernel_hats(grid, k, R, with_grad=False)
    rng = np.random.default_rng(1)
    S = np.zeros((48, 48), complex)
    S[20:28, 20:28] = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    conv = np.fft.ifft2(phi_hat * np.fft.fft2(S))
    X, Y = grid.meshgrid()
    h = grid.h
    direct = np.zeros_like(S)
    for i0, j0 in zip(*np.nonzero(np.abs(S) > 0)):
        r = np.hypot(X - X[i0, j0], Y - Y[i0, j0])
        kern = np.where((r <= R) & (r > 0),
                        (1j / 4) * hankel1(0, k * np.maximum(r, 1e-30)), 0)
        direct += kern * S[i0, j0] * h * h
    mask = np.ones_like(S, bool)
    mask[18:30, 18:30] = False  # skip self cells (different quadrature there)
    assert np.max(np.abs(conv[mask] - direct[mask])) < 1e-13


# ---------------------------------------------------------------------------
# solves
# ---------------------------------------------------------------------------
def flat_medium(n=128, side=12.0):
    grid = Grid2D(side=side, n=n)
    return CoefficientGrid(grid=grid, a=np.ones((n, n)), c=np.ones((n, n)))


def test_zero_contrast_annihilation():
    med = flat_medium()
    sol = solve_scattering(med, PlaneWave(k=1.0, direction=(1, 0)), tol=1e-8)
    assert np.max(np.abs(sol.u_scattered)) <= 1e-7


def test_resolution_guard():
    med = flat_medium(n=16, side=12.0)
    with pytest.raises(ResolutionTooCoarse):
        solve_scattering(med, PlaneWave(k=2.0, direction=(1, 0)))


@pytest.fixture(scope="module")
def disc_solution():
    grid = Grid2D(side=16.0, n=384)
    med = make_disc_medium(grid, radius=1.0, c_inside=2.0)
    sol = solve_scattering(med, PlaneWave(k=2.0, direction=(1.0, 0.0)), tol=1e-8)
    return med, sol


def test_disc_far_field_matches_series(disc_solution):
    med, sol = disc_solution
    ff = far_field(sol, med, n_angles=256)
    oracle = disc_farfield_series(2.0, 2.0, 1.0, 0.0, ff.angles)
    rel = (np.sqrt(np.sum(np.abs(ff.values - oracle) ** 2))
           / np.sqrt(np.sum(np.abs(oracle) ** 2)))
    assert rel <= 2e-3  # coarser grid than the acceptance run


def test_optical_theorem(disc_solution):
    med, sol = disc_solution
    ff = far_field(sol, med, n_angles=256)
    assert optical_theorem_balance(ff, 0.0) <= 0.02


def test_far_field_norms_consistent(disc_solution):
    med, sol = disc_solution
    ff = far_field(sol, med, n_angles=128)
    dtheta = 2 * np.pi / 128
    assert ff.l2_norm == pytest.approx(math.sqrt(dtheta * np.sum(np.abs(ff.values) ** 2)))
    assert ff.sup_norm == pytest.approx(np.max(np.abs(ff.values)))


def test_self_convergence():
    ffs = []
    for n in (128, 192, 256):
        grid = Grid2D(side=12.0, n=n)
        med = make_disc_medium(grid, radius=1.0, c_inside=1.5)
        sol = solve_scattering(med, PlaneWave(k=2.0, direction=(1, 0)), tol=1e-8)
        ffs.append(far_field(sol, med, n_angles=64))
    d1 = farfield_l2_diff(ffs[0], ffs[2])
    d2 = farfield_l2_diff(ffs[1], ffs[2])
    assert d2 < d1 / 1.5


def test_reciprocity():
    grid = Grid2D(side=12.0, n=256)
    med = make_disc_medium(grid, radius=0.8, c_inside=1.6, center=(0.2, -0.1))
    k = 2.0
    th_obs = 1.1
    n_angles = 256
    sol1 = solve_scattering(med, PlaneWave(k=k, direction=(1.0, 0.0)), tol=1e-8)
    ff1 = far_field(sol1, med, n_angles=n_angles)
    d2 = (math.cos(th_obs + math.pi), math.sin(th_obs + math.pi))
    sol2 = solve_scattering(med, PlaneWave(k=k, direction=d2), tol=1e-8)
    ff2 = far_field(sol2, med, n_angles=n_angles)
    i1 = round(th_obs / (2 * math.pi / n_angles))
    i2 = round(math.pi / (2 * math.pi / n_angles)) % n_angles
    # discretization-limited; converges with the grid
    assert abs(ff1.values[i1] - ff2.values[i2]) <= 0.05 * max(abs(ff1.values[i1]), 1e-6)


# ---------------------------------------------------------------------------
# medium assembly
# ---------------------------------------------------------------------------
SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def test_assemble_medium_admissible_square():
    med = assemble_medium(dict(vertices=SQUARE, n=256, rho0=0.5, rho_bulk=0.5,
                               gamma_order="vanishing", gamma_bulk=0.3, sigma=0.5,
                               blend_radius=0.4, moll_width=0.06))
    assert med.a0 > 0
    assert len(med.corners) == 4
    assert med.has_conductivity_contrast()
    # vertex contrast on the bisector is preserved
    X, Y = med.grid.meshgrid()
    inside = med.hull.contains_mask(X, Y) & (med.hull.signed_distance(X, Y) < -0.15)
    assert np.max(np.abs(med.c[inside] - 1.5)) < 1e-9


def test_assemble_medium_ellipticity_violation():
    with pytest.raises(EllipticityViolated):
        assemble_medium(dict(vertices=SQUARE, n=128, rho0=0.0,
                             gamma_order="jump", gamma0=-1.2, gamma_bulk=-1.2,
                             sigma=0.5, blend_radius=0.4))


def test_assemble_medium_no_contrast_flag():
    med = assemble_medium(dict(vertices=SQUARE, n=128, rho0=0.0, rho_bulk=0.0,
                               gamma_bulk=0.0, sigma=0.5, blend_radius=0.4))
    assert not med.has_contrast()


def test_assemble_medium_per_vertex_lists():
    med = assemble_medium(dict(vertices=SQUARE, n=128, rho0=[0.5, 0.4, 0.3, 0.2],
                               rho_bulk=0.3, gamma_order="vanishing", gamma_bulk=0.0,
                               sigma=0.5, blend_radius=0.3))
    assert [c.rho0 for c in med.corners] == [0.5, 0.4, 0.3, 0.2]


# ---------------------------------------------------------------------------
# transmission identity (polygon)
# ---------------------------------------------------------------------------
def test_identity_zero_contrast_trivial():
    ones = lambda p: np.ones(len(p), dtype=complex)
    pw = PlaneWave(k=1.0, direction=(1.0, 0.0))
    poly = ConvexPolygon(((0.1, 0.0), (0.9, 0.2), (0.7, 0.9), (0.0, 0.6)))
    res = transmission_identity_residual(
        (ones, ones), (pw.evaluate, pw.gradient), (pw.evaluate, pw.gradient),
        (pw.evaluate, pw.gradient), poly, 1.0, w_residual=0.0)
    assert res <= 1e-12


def test_identity_green_formula_case():
    # a = c = 1 reduces the identity to the Green formula for Helmholtz fields
    ones = lambda p: np.ones(len(p), dtype=complex)
    poly = ConvexPolygon(((0.1, 0.0), (0.9, 0.2), (0.7, 0.9), (0.0, 0.6)))
    pws = [PlaneWave(k=1.0, direction=(math.cos(t), math.sin(t)))
           for t in (0.0, 1.3, 2.2)]
    res = transmission_identity_residual(
        (ones, ones), (pws[0].evaluate, pws[0].gradient),
        (pws[1].evaluate, pws[1].gradient), (pws[2].evaluate, pws[2].gradient),
        poly, 1.0, w_residual=0.0)
    assert res <= 1e-12


def test_identity_rejects_bad_test_field():
    ones = lambda p: np.ones(len(p), dtype=complex)
    pw = PlaneWave(k=1.0, direction=(1.0, 0.0))
    poly = ConvexPolygon(((0.1, 0.0), (0.9, 0.2), (0.7, 0.9), (0.0, 0.6)))
    with pytest.raises(TestFieldInvalid):
        transmission_identity_residual(
            (ones, ones), (pw.evaluate, pw.gradient), (pw.evaluate, pw.gradient),
            (pw.evaluate, pw.gradient), poly, 1.0, w_residual=1e-3)


def test_field_handle_normal_derivative_stencil():
    # one-sided stencil against the analytic gradient of a plane wave
    pw = PlaneWave(k=1.0, direction=(math.cos(0.5), math.sin(0.5)))
    handle = as_field_handle(pw.evaluate, stencil_h=1e-3)
    pts = np.array([[0.3, 0.2], [0.1, -0.4]])
    normals = np.array([[1.0, 0.0], [0.0, 1.0]])
    got = handle.normal_derivative(pts, normals)
    expected = np.sum(pw.gradient(pts) * normals, axis=1)
    assert got == pytest.approx(expected, abs=1e-8)


def test_far_field_zero_contrast_identically_zero():
    med = flat_medium(n=128, side=12.0)
    sol = solve_scattering(med, PlaneWave(k=1.0, direction=(1, 0)), tol=1e-8)
    ff = far_field(sol, med, n_angles=64)
    assert np.max(np.abs(ff.values)) == 0.0


def test_sector_identity_zero_contrast_trivial():
    from cornerscat.forward import sector_identity_residual
    from cornerscat.geometry import Sector
    ones = lambda p: np.ones(len(p), dtype=complex)
    pw = PlaneWave(k=1.0, direction=(math.cos(0.2), math.sin(0.2)))
    sec = Sector(vertex=(0.0, 0.0), theta_ref=0.0, aperture=1.1, radius=0.3)
    res = sector_identity_residual((ones, ones), (pw.evaluate, pw.gradient),
                                   (pw.evaluate, pw.gradient),
                                   (pw.evaluate, pw.gradient), sec, 1.0,
                                   w_residual=0.0)
    assert res <= 1e-14


def test_conductivity_coupled_disc_matches_series():
    # constant (a, c) disc: validates the gradient-coupled unknowns, the
    # gradient kernels, and the far-field conductivity term against the
    # extended series oracle; the jump in `a` limits the convergence rate,
    # so the tolerance is looser than the potential-only case
    grid = Grid2D(side=16.0, n=384)
    med = make_disc_medium(grid, radius=1.0, c_inside=1.5, a_inside=1.3)
    sol = solve_scattering(med, PlaneWave(k=2.0, direction=(1.0, 0.0)), tol=1e-8)
    ff = far_field(sol, med, n_angles=256)
    oracle = disc_farfield_series(2.0, 1.5, 1.0, 0.0, ff.angles, a0=1.3)
    rel = (np.sqrt(np.sum(np.abs(ff.values - oracle) ** 2))
           / np.sqrt(np.sum(np.abs(oracle) ** 2)))
    assert rel <= 5e-3


def test_identity_polygon_with_cgo_test_field():
    # end-to-end: manufactured medium, incident-field v, complex-exponential
    # test solution from the residual solver, full-boundary identity
    from cornerscat.asymptotics import EtaVector
    from cornerscat.cgo import ContrastPotential, solve_cgo
    from cornerscat.experiments import _manufactured_fields
    from cornerscat.grids import TwistedTransform, super_gaussian
    from scipy.interpolate import RectBivariateSpline

    k = 1.0
    man = _manufactured_fields(k)
    grid = Grid2D(side=8.0, n=384)
    pts = grid.points()
    chi = super_gaussian(grid, radius=0.9)
    cvals = man["c"](pts).reshape(grid.n, grid.n)
    q = ContrastPotential(grid=grid, q=(-k * k * cvals * chi).astype(complex))
    tau = 80.0
    eta = EtaVector(tau=tau, phi=0.5, branch=+1)
    sol = solve_cgo(q, eta, tol=1e-12)
    tt = TwistedTransform(grid)
    rx, ry = tt.grad(sol.r_values)
    x_ax, y_ax = grid.axes

    def spl(F):
        return (RectBivariateSpline(x_ax, y_ax, F.real),
                RectBivariateSpline(x_ax, y_ax, F.imag))

    sr, srx, sry = spl(sol.r_values), spl(rx), spl(ry)
    ev = eta.vector

    def w_fn(p):
        r = sr[0].ev(p[:, 0], p[:, 1]) + 1j * sr[1].ev(p[:, 0], p[:, 1])
        return (1.0 + r) * np.exp(ev[0] * p[:, 0] + ev[1] * p[:, 1])

    def gw_fn(p):
        r = sr[0].ev(p[:, 0], p[:, 1]) + 1j * sr[1].ev(p[:, 0], p[:, 1])
        drx = srx[0].ev(p[:, 0], p[:, 1]) + 1j * srx[1].ev(p[:, 0], p[:, 1])
        dry = sry[0].ev(p[:, 0], p[:, 1]) + 1j * sry[1].ev(p[:, 0], p[:, 1])
        e = np.exp(ev[0] * p[:, 0] + ev[1] * p[:, 1])
        return np.column_stack([(drx + (1 + r) * ev[0]) * e,
                                (dry + (1 + r) * ev[1]) * e])

    ones = lambda p: np.ones(len(p), dtype=complex)
    poly = ConvexPolygon(((0.02, -0.1), (0.25, -0.02), (0.22, 0.18), (0.0, 0.12)))
    res = transmission_identity_residual(
        (ones, man["c"]), (man["u"], man["gu"]), (man["v"], man["gv"]),
        (w_fn, gw_fn), poly, k, w_residual=sol.fixed_point_residual,
        tau_scale=tau)
    assert res <= 1e-5
