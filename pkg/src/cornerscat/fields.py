"""Incident fields, their Taylor jets at a corner, and jet structure checks.

Entire solutions of the 2D Helmholtz equation are represented by a few
variants (plane waves, circular-harmonic Bessel modes, Herglotz superpositions
and finite linear combinations). Jets are homogeneous-polynomial coefficient
tables extracted either from closed-form series or from the field's
circular-harmonic coefficients about the expansion center, which avoids the
subtractive cancellation of nested finite differences.

A homogeneous polynomial of degree j is stored as a complex vector of length
j + 1: entry t is the coefficient of y1**(j-t) * y2**t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np
from scipy.special import comb, jv

from .errors import DegenerateJet, SingularSystem
from .geometry import Sector, exceptional_angle

COEF_RTOL = 1e-12  # nonzero-coefficient threshold, relative to the jet's largest


# ---------------------------------------------------------------------------
# homogeneous-table algebra
# ---------------------------------------------------------------------------
def table_dx(t: np.ndarray) -> np.ndarray:
    """d/dy1 of a degree-j table; returns degree j-1."""
    j = len(t) - 1
    if j == 0:
        return np.zeros(0, dtype=complex)
    powers = np.arange(j, 0, -1)  # exponent of y1 at entries 0..j-1
    return t[:-1] * powers


def table_dy(t: np.ndarray) -> np.ndarray:
    """d/dy2 of a degree-j table; returns degree j-1."""
    j = len(t) - 1
    if j == 0:
        return np.zeros(0, dtype=complex)
    powers = np.arange(1, j + 1)
    return t[1:] * powers


def table_laplacian(t: np.ndarray) -> np.ndarray:
    if len(t) - 1 < 2:
        return np.zeros(max(len(t) - 2, 0), dtype=complex)
    return table_dx(table_dx(t)) + table_dy(table_dy(t))


def table_eval(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate a degree-j table at points y of shape (..., 2)."""
    j = len(t) - 1
    y = np.asarray(y, dtype=float)
    out = np.zeros(y.shape[:-1], dtype=complex)
    for s in range(j + 1):
        out = out + t[s] * y[..., 0] ** (j - s) * y[..., 1] ** s
    return out


def _zpow_table(m: int, conjugate: bool = False) -> np.ndarray:
    """Table of (y1 + i y2)**m, or its conjugate pattern."""
    unit = -1j if conjugate else 1j
    t = np.arange(m + 1)
    return comb(m, t) * unit**t


def _r2pow_table(s: int) -> np.ndarray:
    """Table of (y1**2 + y2**2)**s, degree 2s."""
    out = np.array([1.0 + 0j])
    base = np.array([1.0, 0.0, 1.0], dtype=complex)
    for _ in range(s):
        out = np.convolve(out, base)
    return out


def _bessel_term_tables(m: int, k: float, max_degree: int) -> list[tuple[int, np.ndarray]]:
    """Homogeneous terms of jv(m, k r) e^{i m theta} through max_degree."""
    am = abs(m)
    sign = (-1.0) ** am if m < 0 else 1.0
    zpow = _zpow_table(am, conjugate=m < 0)
    out = []
    s = 0
    while am + 2 * s <= max_degree:
        j = am + 2 * s
        coef = sign * (-1.0) ** s * (k / 2.0) ** j / (math.factorial(s) * math.factorial(am + s))
        out.append((j, coef * np.convolve(_r2pow_table(s), zpow)))
        s += 1
    return out


# ---------------------------------------------------------------------------
# incident field variants
# ---------------------------------------------------------------------------
def _atleast_points(x) -> tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        return pts[None, :], True
    return pts, False


@dataclass(frozen=True)
class PlaneWave:
    """u(x) = exp(i k d.x) with a unit propagation direction d."""

    k: float
    direction: tuple[float, float]

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector")

    def evaluate(self, x):
        pts, single = _atleast_points(x)
        d = np.asarray(self.direction)
        vals = np.exp(1j * self.k * (pts @ d))
        return vals[0] if single else vals

    def gradient(self, x):
        pts, single = _atleast_points(x)
        d = np.asarray(self.direction)
        g = 1j * self.k * d[None, :] * np.exp(1j * self.k * (pts @ d))[:, None]
        return g[0] if single else g


@dataclass(frozen=True)
class BesselMode:
    """u(x) = amplitude * J_m(k r) exp(i m theta), centered at the origin."""

    k: float
    order: int
    amplitude: complex = 1.0

    def evaluate(self, x):
        pts, single = _atleast_points(x)
        r = np.hypot(pts[:, 0], pts[:, 1])
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        vals = self.amplitude * jv(self.order, self.k * r) * np.exp(1j * self.order * theta)
        return vals[0] if single else vals

    def gradient(self, x):
        pts, single = _atleast_points(x)
        m, k = self.order, self.k
        r = np.hypot(pts[:, 0], pts[:, 1])
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        safe = r > 0.0
        rs = np.where(safe, r, 1.0)
        dr = 0.5 * k * (jv(m - 1, k * rs) - jv(m + 1, k * rs)) * np.exp(1j * m * theta)
        dt_over_r = 1j * m * jv(m, k * rs) / rs * np.exp(1j * m * theta)
        gx = np.cos(theta) * dr - np.sin(theta) * dt_over_r
        gy = np.sin(theta) * dr + np.cos(theta) * dt_over_r
        g = self.amplitude * np.column_stack([gx, gy])
        if np.any(~safe):
            g0 = np.zeros(2, dtype=complex)
            if abs(m) == 1:
                # J_{+-1}(kr) e^{+-i theta} ~ (+-k/2)(y1 +- i y2)
                g0 = (k / 2.0) * np.array([1.0, 1j * m], dtype=complex) * np.sign(m)
                g0 *= self.amplitude
            g[~safe] = g0
        return g[0] if single else g


@dataclass(frozen=True)
class HerglotzWave:
    """u(x) = int g(alpha) exp(i k x.d(alpha)) d alpha over the unit circle.

    The kernel is sampled on a uniform angle grid; the quadrature is the
    periodic trapezoid rule, spectrally accurate for smooth kernels.
    """

    k: float
    kernel: tuple[complex, ...]

    def __post_init__(self):
        if len(self.kernel) < 4:
            raise ValueError("kernel grid too coarse")

    @property
    def angles(self) -> np.ndarray:
        n = len(self.kernel)
        return 2 * np.pi * np.arange(n) / n

    def _dirs(self) -> np.ndarray:
        a = self.angles
        return np.column_stack([np.cos(a), np.sin(a)])

    def evaluate(self, x):
        pts, single = _atleast_points(x)
        g = np.asarray(self.kernel, dtype=complex)
        dtheta = 2 * np.pi / len(g)
        phases = np.exp(1j * self.k * pts @ self._dirs().T)
        vals = dtheta * phases @ g
        return vals[0] if single else vals

    def gradient(self, x):
        pts, single = _atleast_points(x)
        g = np.asarray(self.kernel, dtype=complex)
        dtheta = 2 * np.pi / len(g)
        dirs = self._dirs()
        phases = np.exp(1j * self.k * pts @ dirs.T)
        gx = dtheta * phases @ (1j * self.k * dirs[:, 0] * g)
        gy = dtheta * phases @ (1j * self.k * dirs[:, 1] * g)
        out = np.column_stack([gx, gy])
        return out[0] if single else out


@dataclass(frozen=True)
class Superposition:
    """Finite linear combination of incident fields sharing one wavenumber."""

    parts: tuple
    weights: tuple[complex, ...]

    def __post_init__(self):
        if len(self.parts) != len(self.weights) or not self.parts:
            raise ValueError("parts and weights must be nonempty and match")
        ks = {p.k for p in self.parts}
        if len(ks) != 1:
            raise ValueError("all parts must share one wavenumber")

    @property
    def k(self) -> float:
        return self.parts[0].k

    def evaluate(self, x):
        return sum(w * p.evaluate(x) for p, w in zip(self.parts, self.weights))

    def gradient(self, x):
        return sum(w * p.gradient(x) for p, w in zip(self.parts, self.weights))


IncidentField = PlaneWave | BesselMode | HerglotzWave | Superposition


def helmholtz_residual(f: IncidentField, points: np.ndarray, spacing: float | None = None) -> float:
    """Max relative residual of Delta u + k^2 u on a 4th-order 9-point stencil."""
    pts, _ = _atleast_points(points)
    h = spacing if spacing is not None else 0.01 / f.k
    offsets = np.array([[0.0, 0.0], [h, 0], [-h, 0], [0, h], [0, -h],
                        [2 * h, 0], [-2 * h, 0], [0, 2 * h], [0, -2 * h]])
    vals = np.stack([f.evaluate(pts + off[None, :]) for off in offsets])
    lap = (-(vals[5] + vals[6] + vals[7] + vals[8])
           + 16 * (vals[1] + vals[2] + vals[3] + vals[4])
           - 60 * vals[0]) / (12 * h * h)
    res = np.abs(lap + f.k**2 * vals[0])
    scale = f.k**2 * (np.abs(vals[0]) + 1e-30)
    return float(np.max(res / scale))


# ---------------------------------------------------------------------------
# harmonic polynomials and leading gradient terms
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class HarmonicPolynomial2D:
    """P = b_plus (y1 + i y2)**N + b_minus (y1 - i y2)**N, harmonic by construction."""

    degree: int
    b_plus: complex
    b_minus: complex

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")

    def table(self) -> np.ndarray:
        return (self.b_plus * _zpow_table(self.degree)
                + self.b_minus * _zpow_table(self.degree, conjugate=True))

    def laplacian_table_norm(self) -> float:
        lap = table_laplacian(self.table())
        return float(np.max(np.abs(lap))) if lap.size else 0.0

    def evaluate(self, y) -> np.ndarray:
        return table_eval(self.table(), y)


@dataclass(frozen=True)
class LeadingGradient:
    """Leading term of a gradient expansion, degree N.

    Field: c_plus (1, i) z**N + c_minus (i, 1) zbar**N, plus, when N = 1 and
    the divergence is nonzero, the curl-free part (k^2 v0 / 2)(-zbar, i z)
    carrying div = -k^2 v0.
    """

    degree: int
    c_plus: complex
    c_minus: complex
    v0: complex = 0.0

    def component_tables(self, k: float) -> tuple[np.ndarray, np.ndarray]:
        N = self.degree
        zp = _zpow_table(N)
        zm = _zpow_table(N, conjugate=True)
        tx = self.c_plus * zp + 1j * self.c_minus * zm
        ty = 1j * self.c_plus * zp + self.c_minus * zm
        if N == 1 and self.v0 != 0:
            w = k * k * self.v0 / 2.0
            tx = tx + w * np.array([-1.0, 1j])       # -zbar
            ty = ty + w * np.array([1j, -1.0])       # i z
        return tx, ty


# ---------------------------------------------------------------------------
# Taylor jets
# ---------------------------------------------------------------------------
@dataclass
class FieldExpansion:
    """Taylor jet of a Helmholtz solution about a center.

    terms[j] is the degree-j homogeneous table of v; the gradient expansion
    term V_j is the (vector) table pair derived from terms[j + 1]. N0 and N
    are the first nonzero degrees of v and grad v under the relative
    coefficient threshold; v0 is the value at the center; vlead describes V_N.
    """

    center: tuple[float, float]
    k: float
    terms: list[np.ndarray]
    N0: int
    N: int
    v0: complex
    vlead: LeadingGradient

    @property
    def order(self) -> int:
        return len(self.terms) - 1

    def grad_term(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        t = self.terms[j + 1]
        return table_dx(t), table_dy(t)

    def scale(self) -> float:
        return max((float(np.max(np.abs(t))) if t.size else 0.0) for t in self.terms)


def _tables_from_circular_coeffs(coeffs: dict[int, complex], k: float, order: int) -> list[np.ndarray]:
    tables = [np.zeros(j + 1, dtype=complex) for j in range(order + 1)]
    for m, cm in coeffs.items():
        if cm == 0:
            continue
        for j, t in _bessel_term_tables(m, k, order):
            tables[j] = tables[j] + cm * t
    return tables


def _circular_coeffs(f: IncidentField, center: np.ndarray, order: int) -> dict[int, complex]:
    """Circular-harmonic coefficients of f about center, modes |m| <= order + 2."""
    k = f.k
    m_max = order + 2
    if isinstance(f, PlaneWave):
        d = np.asarray(f.direction)
        theta_d = math.atan2(d[1], d[0])
        pref = np.exp(1j * k * float(center @ d))
        return {m: pref * (1j**m) * np.exp(-1j * m * theta_d) for m in range(-m_max, m_max + 1)}
    if isinstance(f, BesselMode) and np.allclose(center, 0.0):
        return {f.order: complex(f.amplitude)}
    if isinstance(f, HerglotzWave):
        g = np.asarray(f.kernel, dtype=complex)
        a = f.angles
        dtheta = 2 * np.pi / len(g)
        base = g * np.exp(1j * k * (center[0] * np.cos(a) + center[1] * np.sin(a)))
        return {
            m: (1j**m) * dtheta * complex(np.sum(base * np.exp(-1j * m * a)))
            for m in range(-m_max, m_max + 1)
        }
    if isinstance(f, Superposition):
        out: dict[int, complex] = {}
        for p, w in zip(f.parts, f.weights):
            for m, cm in _circular_coeffs(p, center, order).items():
                out[m] = out.get(m, 0.0) + w * cm
        return out
    # generic fallback: sample on a circle and divide by J_m(k r0)
    r0 = 2.5 / k
    M = 16 * (m_max + 2)
    thetas = 2 * np.pi * np.arange(M) / M
    pts = center[None, :] + r0 * np.column_stack([np.cos(thetas), np.sin(thetas)])
    vals = f.evaluate(pts)
    fhat = np.fft.fft(vals) / M
    out = {}
    for m in range(-m_max, m_max + 1):
        denom = jv(m, k * r0)
        if abs(denom) < 1e-13:
            continue
        out[m] = complex(fhat[m % M]) / denom
    return out


def _match_leading_gradient(tx: np.ndarray, ty: np.ndarray, N: int, k: float,
                            v0: complex) -> LeadingGradient:
    """Fit (c_plus, c_minus) so the basis reproduces the V_N tables."""
    v0_used = v0 if N == 1 else 0.0
    if N == 1 and v0_used != 0:
        w = k * k * v0_used / 2.0
        tx = tx - w * np.array([-1.0, 1j])
        ty = ty - w * np.array([1j, -1.0])
    zp = _zpow_table(N)
    zm = _zpow_table(N, conjugate=True)
    A = np.concatenate([np.column_stack([zp, 1j * zm]),
                        np.column_stack([1j * zp, zm])])
    rhs = np.concatenate([tx, ty])
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return LeadingGradient(degree=N, c_plus=complex(sol[0]), c_minus=complex(sol[1]),
                           v0=complex(v0_used))


def taylor_jet(f: IncidentField, center, order: int, k: float | None = None) -> FieldExpansion:
    """Homogeneous Taylor tables of f about center through the given degree.

    Raises DegenerateJet when every coefficient through the requested order is
    below the relative threshold.
    """
    if order < 2:
        raise ValueError("order must be >= 2")
    k = f.k if k is None else k
    if abs(k - f.k) > 1e-12:
        raise ValueError("wavenumber disagrees with the field's")
    center = np.asarray(center, dtype=float)
    coeffs = _circular_coeffs(f, center, order)
    tables = _tables_from_circular_coeffs(coeffs, k, order)

    scale = max((float(np.max(np.abs(t))) if t.size else 0.0) for t in tables)
    if scale == 0.0:
        raise DegenerateJet(f"all coefficients vanish through degree {order}")
    floor = COEF_RTOL * scale

    N0 = next((j for j, t in enumerate(tables) if np.max(np.abs(t)) > floor), None)
    if N0 is None:
        raise DegenerateJet(f"all coefficients below threshold through degree {order}")
    N = None
    for j in range(order):
        gx, gy = table_dx(tables[j + 1]), table_dy(tables[j + 1])
        gmax = max(np.max(np.abs(gx)) if gx.size else 0.0,
                   np.max(np.abs(gy)) if gy.size else 0.0)
        if gmax > floor:
            N = j
            break
    if N is None:
        raise DegenerateJet(f"gradient expansion vanishes through degree {order - 1}")

    v0 = complex(tables[0][0])
    vlead = _match_leading_gradient(table_dx(tables[N + 1]), table_dy(tables[N + 1]),
                                    N, k, v0)
    return FieldExpansion(center=(float(center[0]), float(center[1])), k=k,
                          terms=tables, N0=N0, N=N, v0=v0, vlead=vlead)


# ---------------------------------------------------------------------------
# jet-structure verification
# ---------------------------------------------------------------------------
@dataclass
class JetCheck:
    name: str
    passed: bool
    residual: float


def verify_jet_structure(e: FieldExpansion, k: float | None = None,
                         tol: float = 1e-10) -> list[JetCheck]:
    """Check the four structural properties of a Helmholtz Taylor jet.

    1. every gradient term is curl free;
    2. N <= N0 <= N + 1, or N0 = 0 and N = 1 with the auxiliary vanishing
       v_1 = div V_2 = Lap v_3 = 0;
    3. div V_N = 0 when N != 1, and div V_N = -k^2 v0 when N = 1;
    4. v_N0, v_{N0+1}, V_N and V_{N+1} are harmonic.

    Failures are entries in the returned report, never exceptions.
    """
    k = e.k if k is None else k
    scale = e.scale()
    if scale == 0.0:
        scale = 1.0
    checks: list[JetCheck] = []

    def tmax(t: np.ndarray) -> float:
        return float(np.max(np.abs(t))) if t.size else 0.0

    # 1: curl V_j = d/dx (V_j)_y - d/dy (V_j)_x
    curl_res = 0.0
    for j in range(e.order):
        gx, gy = e.grad_term(j)
        curl = (table_dx(gy) - table_dy(gx)) if j >= 1 else np.zeros(0, dtype=complex)
        curl_res = max(curl_res, tmax(curl))
    checks.append(JetCheck("curl_free", curl_res <= tol * scale, curl_res / scale))

    # 2: index bracketing, with the auxiliary conditions in the special case
    if e.N0 == 0 and e.N == 1:
        res = tmax(e.terms[1]) if e.order >= 1 else 0.0
        if e.order >= 3:
            gx, gy = e.grad_term(2)
            res = max(res, tmax(table_dx(gx) + table_dy(gy)))
            res = max(res, tmax(table_laplacian(e.terms[3])))
        checks.append(JetCheck("index_bracket", res <= tol * scale, res / scale))
    else:
        ok = e.N <= e.N0 <= e.N + 1
        checks.append(JetCheck("index_bracket", ok, 0.0 if ok else 1.0))

    # 3: divergence of the leading gradient term
    gx, gy = e.grad_term(e.N)
    div = table_dx(gx) + table_dy(gy)
    if e.N != 1:
        res = tmax(div)
    else:
        target = -k * k * e.v0
        res = abs(complex(div[0]) - target) if div.size else abs(target)
    checks.append(JetCheck("leading_divergence", res <= tol * max(scale, 1.0),
                           res / max(scale, 1.0)))

    # 4: harmonicity of the four leading polynomials
    res = 0.0
    for j in (e.N0, e.N0 + 1):
        if j <= e.order:
            res = max(res, tmax(table_laplacian(e.terms[j])))
    for j in (e.N, e.N + 1):
        if j + 1 <= e.order:
            gx, gy = e.grad_term(j)
            res = max(res, tmax(table_laplacian(gx)), tmax(table_laplacian(gy)))
    checks.append(JetCheck("leading_harmonic", res <= tol * scale, res / scale))
    return checks


def class_E_membership(f: IncidentField, s: Sector, k: float | None = None,
                       order: int = 8) -> int | None:
    """Exceptional-class index l for the pair (field, corner), if any.

    Computes the leading gradient degree N at the sector vertex and returns
    the integer l with aperture = l pi / (1 + N), or None.
    """
    jet = taylor_jet(f, s.vertex, order=order, k=k)
    return exceptional_angle(s.aperture, jet.N)


# ---------------------------------------------------------------------------
# Herglotz least squares
# ---------------------------------------------------------------------------
@dataclass
class TraceSamples:
    """Samples of (value, optional normal derivative) along a curve.

    ds holds quadrature weights (arc-length elements) used to weight the
    misfit; normals are required when normal_values are given.
    """

    points: np.ndarray
    values: np.ndarray
    ds: np.ndarray
    normals: np.ndarray | None = None
    normal_values: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.points)
        if len(self.values) != n or len(self.ds) != n:
            raise ValueError("points, values, ds must have equal length")
        if (self.normal_values is None) != (self.normals is None):
            raise ValueError("normals and normal_values go together")


@dataclass
class HerglotzFit:
    kernel: np.ndarray
    angles: np.ndarray
    misfit: float
    g_norm: float
    lam: float

    def wave(self, k: float) -> HerglotzWave:
        return HerglotzWave(k=k, kernel=tuple(self.kernel))


def herglotz_least_squares(target: TraceSamples, k: float, n_kernel: int,
                           lam: float) -> HerglotzFit:
    """Tikhonov-regularized kernel fit of a Herglotz wave to trace samples.

    Minimizes ||v_g - target||^2 + lam ||g||^2 with the L2(S1) kernel norm and
    arc-length-weighted data misfit; normal-derivative rows are scaled by 1/k
    to match units. lam must be positive.
    """
    if lam <= 0:
        raise ValueError("regularization weight must be positive")
    angles = 2 * np.pi * np.arange(n_kernel) / n_kernel
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    dtheta = 2 * np.pi / n_kernel

    phases = np.exp(1j * k * target.points @ dirs.T)  # (n_pts, n_kernel)
    rows = [phases * dtheta]
    data = [np.asarray(target.values, dtype=complex)]
    w = [np.asarray(target.ds, dtype=float)]
    if target.normal_values is not None:
        ndotd = target.normals @ dirs.T
        rows.append(1j * ndotd * phases * dtheta)  # (1/k) * d_nu
        data.append(np.asarray(target.normal_values, dtype=complex) / k)
        w.append(np.asarray(target.ds, dtype=float))
    A = np.vstack(rows)
    b = np.concatenate(data)
    sw = np.sqrt(np.concatenate(w))
    Aw = A * sw[:, None]
    bw = b * sw

    stacked = np.vstack([Aw, math.sqrt(lam * dtheta) * np.eye(n_kernel, dtype=complex)])
    rhs = np.concatenate([bw, np.zeros(n_kernel, dtype=complex)])
    sol, _, rank, _ = np.linalg.lstsq(stacked, rhs, rcond=None)
    if rank < n_kernel:
        raise SingularSystem(f"rank {rank} < kernel size {n_kernel} despite regularization")
    misfit = float(np.linalg.norm(Aw @ sol - bw))
    g_norm = float(np.sqrt(dtheta * np.sum(np.abs(sol) ** 2)))
    return HerglotzFit(kernel=sol, angles=angles, misfit=misfit, g_norm=g_norm, lam=lam)
