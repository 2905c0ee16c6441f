"""Reference solutions on a disc by separation of variables.

Used as independent oracles: the far-field series for a penetrable disc with
constant refractive index (checks the volume-integral solver), and the
interior transmission eigenpair for the same geometry (feeds the Herglotz
kernel study). Everything here is cylinder-function algebra; no grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import hankel1, h1vp, jv, jvp

from .errors import NoRootInInterval, PreconditionViolated


def disc_scattering_coeffs(k: float, n0: float, radius: float, m_max: int,
                           a0: float = 1.0):
    """Series coefficients (alpha_m inside, beta_m outside) for a plane wave.

    Constant coefficients (a0, n0) inside the disc give interior wavenumber
    k1 = k sqrt(n0/a0); matching is continuity of the value and of the
    co-normal derivative a0 * du/dr at r = radius.
    """
    k1 = k * math.sqrt(n0 / a0)
    ms = np.arange(-m_max, m_max + 1)
    a = radius
    J_ka = jv(ms, k * a)
    Jp_ka = jvp(ms, k * a)
    H_ka = hankel1(ms, k * a)
    Hp_ka = h1vp(ms, k * a)
    J_k1a = jv(ms, k1 * a)
    Jp_k1a = jvp(ms, k1 * a)
    inc = 1j ** ms
    # [J1(k1 a)     -H(ka)] [alpha]   [J(ka)]
    # [a0 k1 J1'    -k H' ] [beta ] = [k J' ] * i^m
    det = J_k1a * (-k * Hp_ka) - (-H_ka) * (a0 * k1 * Jp_k1a)
    alpha = inc * (J_ka * (-k * Hp_ka) - (-H_ka) * (k * Jp_ka)) / det
    beta = inc * (J_k1a * (k * Jp_ka) - (J_ka) * (a0 * k1 * Jp_k1a)) / det
    return ms, alpha, beta


def _mode_cap(k: float, n0: float, radius: float) -> int:
    return int(math.ceil(k * math.sqrt(n0) * radius + 10 + 8 * math.log1p(k * radius)))


def disc_farfield_series(k: float, n0: float, radius: float, inc_angle: float,
                         angles: np.ndarray, m_max: int | None = None,
                         a0: float = 1.0) -> np.ndarray:
    """Far-field pattern of a plane wave hitting the disc, on given angles.

    Convention: u_sc ~ exp(ik|x|)/sqrt(|x|) u_inf(xhat), so
    u_inf(theta) = sqrt(2/(pi k)) e^{-i pi/4} sum_m beta_m (-i)^m e^{im(theta - inc)}.
    """
    m_max = m_max or _mode_cap(k, max(n0, n0 / a0), radius)
    ms, _, beta = disc_scattering_coeffs(k, n0, radius, m_max, a0=a0)
    rel = np.asarray(angles)[:, None] - inc_angle
    series = np.sum(beta[None, :] * (-1j) ** ms[None, :] * np.exp(1j * ms[None, :] * rel), axis=1)
    return math.sqrt(2.0 / (math.pi * k)) * np.exp(-1j * math.pi / 4) * series


def disc_total_field(k: float, n0: float, radius: float, inc_angle: float,
                     points: np.ndarray, m_max: int | None = None) -> np.ndarray:
    """Total field of the disc problem at arbitrary points (series evaluation)."""
    m_max = m_max or _mode_cap(k, n0, radius)
    ms, alpha, beta = disc_scattering_coeffs(k, n0, radius, m_max)
    pts = np.atleast_2d(points)
    r = np.hypot(pts[:, 0], pts[:, 1])
    th = np.arctan2(pts[:, 1], pts[:, 0]) - inc_angle
    k1 = k * math.sqrt(n0)
    out = np.zeros(len(pts), dtype=complex)
    inside = r <= radius
    if np.any(inside):
        out[inside] = np.sum(alpha[None, :] * jv(ms[None, :], k1 * r[inside, None])
                             * np.exp(1j * ms[None, :] * th[inside, None]), axis=1)
    if np.any(~inside):
        ro, to = r[~inside, None], th[~inside, None]
        out[~inside] = np.sum(
            (1j ** ms[None, :] * jv(ms[None, :], k * ro)
             + beta[None, :] * hankel1(ms[None, :], k * ro)) * np.exp(1j * ms[None, :] * to),
            axis=1)
    return out


# ---------------------------------------------------------------------------
# interior transmission eigenpair on the disc
# ---------------------------------------------------------------------------
@dataclass
class EigenpairDisc:
    """Mode-m transmission eigenpair of the constant-index disc.

    u solves the interior-index equation (wavenumber kappa sqrt(n0)), v the
    background one (wavenumber kappa); they share Cauchy data on the circle.
    Normalization: v = J_m(kappa r) e^{im theta}; u = alpha J_m(kappa sqrt(n0) r) e^{im theta}.
    """

    radius: float
    n0: float
    mode: int
    kappa: float
    alpha: complex
    det_residual: float
    bracket: tuple[float, float]

    def v_part(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        r = np.hypot(pts[:, 0], pts[:, 1])
        th = np.arctan2(pts[:, 1], pts[:, 0])
        return jv(self.mode, self.kappa * r) * np.exp(1j * self.mode * th)

    def v_part_gradient(self, points: np.ndarray) -> np.ndarray:
        return _polar_mode_gradient(self.mode, self.kappa, 1.0, points)

    def u_part(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        r = np.hypot(pts[:, 0], pts[:, 1])
        th = np.arctan2(pts[:, 1], pts[:, 0])
        k1 = self.kappa * math.sqrt(self.n0)
        return self.alpha * jv(self.mode, k1 * r) * np.exp(1j * self.mode * th)

    def u_part_gradient(self, points: np.ndarray) -> np.ndarray:
        k1 = self.kappa * math.sqrt(self.n0)
        return _polar_mode_gradient(self.mode, k1, self.alpha, points)


def _polar_mode_gradient(m: int, k: float, amp: complex, points: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(points)
    r = np.hypot(pts[:, 0], pts[:, 1])
    th = np.arctan2(pts[:, 1], pts[:, 0])
    rs = np.where(r > 0, r, 1.0)
    dr = k * jvp(m, k * rs) * np.exp(1j * m * th)
    dt = 1j * m * jv(m, k * rs) / rs * np.exp(1j * m * th)
    gx = np.cos(th) * dr - np.sin(th) * dt
    gy = np.sin(th) * dr + np.cos(th) * dt
    return amp * np.column_stack([gx, gy])


def transmission_determinant(k: float, n0: float, radius: float, mode: int) -> float:
    """Determinant of the mode-m Cauchy matching system (real for real inputs)."""
    k1 = k * math.sqrt(n0)
    a = radius
    return float(jv(mode, k1 * a) * k * jvp(mode, k * a)
                 - k1 * jvp(mode, k1 * a) * jv(mode, k * a))


def disc_transmission_eigenpair(radius: float, n0: float,
                                k_interval: tuple[float, float],
                                mode: int = 0, n_scan: int = 600,
                                det_tol: float = 1e-8) -> EigenpairDisc:
    """Smallest transmission eigenvalue of the disc in the interval.

    Scans the matching determinant for a sign change, polishes the root by
    bisection (brentq), and verifies |det| <= det_tol at the result.
    """
    if n0 <= 0 or n0 == 1.0:
        raise PreconditionViolated("need a refractive contrast: n0 > 0, n0 != 1")
    lo, hi = k_interval
    if not 0 < lo < hi:
        raise ValueError("interval must satisfy 0 < lo < hi")
    ks = np.linspace(lo, hi, n_scan)
    vals = np.array([transmission_determinant(k, n0, radius, mode) for k in ks])
    sign_change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if len(sign_change) == 0:
        raise NoRootInInterval(f"no determinant sign change for mode {mode} in {k_interval}")
    i = sign_change[0]
    kappa = brentq(lambda k: transmission_determinant(k, n0, radius, mode),
                   ks[i], ks[i + 1], xtol=1e-14, rtol=8.9e-16)
    resid = abs(transmission_determinant(kappa, n0, radius, mode))
    if resid > det_tol:
        raise NoRootInInterval(f"root polish stalled: |det| = {resid:.3e} > {det_tol}")
    k1 = kappa * math.sqrt(n0)
    denom = jv(mode, k1 * radius)
    if abs(denom) < 1e-12:
        raise NoRootInInterval("degenerate eigenpair: interior Bessel factor vanishes")
    alpha = jv(mode, kappa * radius) / denom
    return EigenpairDisc(radius=radius, n0=n0, mode=mode, kappa=float(kappa),
                         alpha=complex(alpha), det_residual=float(resid),
                         bracket=(float(ks[i]), float(ks[i + 1])))


def eigenpair_match_residual(e: EigenpairDisc, n_theta: int = 64) -> float:
    """Max mismatch of (value, normal derivative) between the two parts on the circle."""
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    pts = e.radius * np.column_stack([np.cos(th), np.sin(th)])
    normals = pts / e.radius
    dv = np.sum(e.v_part_gradient(pts) * normals, axis=1)
    du = np.sum(e.u_part_gradient(pts) * normals, axis=1)
    val_mismatch = np.max(np.abs(e.v_part(pts) - e.u_part(pts)))
    der_mismatch = np.max(np.abs(dv - du)) / max(e.kappa, 1.0)
    return float(max(val_mismatch, der_mismatch))
