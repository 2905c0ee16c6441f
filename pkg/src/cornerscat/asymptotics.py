"""Corner-integral asymptotics.

Laplace-type integrals over a truncated sector against the complex exponential
exp(eta.(x - vertex)) with eta = -tau (d + i d_perp), their closed-form leading
constants in 2D, high-precision incomplete-gamma checks, and power-law decay
fitting for tau ladders.

Branch convention: branch = +1 puts d_perp at angle phi - pi/2, branch = -1 at
phi + pi/2. With x - vertex = r (cos(theta_ref + psi), sin(theta_ref + psi)),
psi in (0, psi0), the phase is

    eta . (x - vertex) = -tau r exp(i b (phi_loc - psi)),   phi_loc = phi - theta_ref,

where b is the branch sign. All closed-form constants below carry the ambient
dimension n symbolically but are derived, and only exercised, at n = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath as mp
import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import NonIntegrable, PreconditionViolated, ZeroField, ZeroSample
from .geometry import Sector

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class EtaVector:
    """Complex phase vector eta = -tau (d + i d_perp), with eta.eta = 0."""

    tau: float
    phi: float
    branch: int = +1

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.branch not in (+1, -1):
            raise ValueError("branch must be +1 or -1")

    @property
    def d(self) -> np.ndarray:
        return np.array([math.cos(self.phi), math.sin(self.phi)])

    @property
    def d_perp(self) -> np.ndarray:
        # branch +1: angle phi - pi/2  ->  (sin phi, -cos phi)
        return self.branch * np.array([math.sin(self.phi), -math.cos(self.phi)])

    @property
    def vector(self) -> np.ndarray:
        return -self.tau * (self.d + 1j * self.d_perp)

    def dot_self(self) -> complex:
        v = self.vector
        return complex(v[0] * v[0] + v[1] * v[1])


@dataclass
class AsymptoticFit:
    """Least-squares power law value ~ constant * tau**exponent."""

    exponent: float
    constant: complex
    rms_residual: float
    tau_range: tuple[float, float]

    def __post_init__(self):
        if not self.tau_range[0] < self.tau_range[1]:
            raise ValueError("tau_range must be increasing")


@dataclass
class LocalExpansion:
    """Leading local behavior of coefficients and fields at a corner.

    Radial powers: conductivity-contrast term ~ |x|**(alpha + beta) with the
    angular profile gamma_beta(psi) V(psi), potential term ~ |x|**(alpha0 +
    beta0) with rho0(psi) vtilde(psi). Profiles are bounded callables on
    [0, psi0]; constants are accepted and wrapped.
    """

    alpha: float
    beta: float
    alpha0: float
    beta0: float
    sigma: float
    gamma_beta: Callable[[np.ndarray], np.ndarray] | complex = 1.0
    rho0_profile: Callable[[np.ndarray], np.ndarray] | complex = 1.0
    V_profile: Callable[[np.ndarray], np.ndarray] | Sequence[complex] = (1.0, 0.0)
    vtilde_profile: Callable[[np.ndarray], np.ndarray] | complex = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.alpha == -1:
            raise ValueError("alpha = -1 is excluded")


def _as_scalar_profile(p) -> Callable[[np.ndarray], np.ndarray]:
    if callable(p):
        return p
    value = complex(p)
    return lambda psi: np.full_like(psi, value, dtype=complex)


def _as_vector_profile(p) -> Callable[[np.ndarray], np.ndarray]:
    if callable(p):
        return p
    v = np.asarray(p, dtype=complex)
    return lambda psi: np.broadcast_to(v, psi.shape + (2,)).copy()


# ---------------------------------------------------------------------------
# incomplete-gamma law
# ---------------------------------------------------------------------------
def incomplete_gamma_check(b: float, mu: complex, s: float) -> tuple[complex, complex, float]:
    """Compare quadrature of int_0^s t**(b-1) exp(-mu t) dt with Gamma(b)/mu**b.

    The truncation remainder is below exp(-s Re(mu)/2) once Re(mu) is large,
    which quickly undercuts double precision, so both the adaptive quadrature
    and the closed form are evaluated in arbitrary precision sized to the
    target and only then rounded. Requires Re(mu) > max(0, 2(b-1)/s).
    """
    if b <= 0 or s <= 0:
        raise PreconditionViolated("b and s must be positive")
    mu1 = mu.real if isinstance(mu, complex) else float(mu)
    if mu1 <= 0 or mu1 < 2 * (b - 1) / s:
        raise PreconditionViolated(
            f"need Re(mu) > 0 and Re(mu) >= 2(b-1)/s = {2 * (b - 1) / s:.6g}"
        )
    # digits: enough to resolve the exp(-s*mu1/2) remainder with margin
    digits = int(s * mu1 / 2 / math.log(10)) + 30
    with mp.workdps(digits):
        mpb = mp.mpf(b)
        mpmu = mp.mpmathify(mu)
        if b < 1:
            # kill the endpoint singularity: t = u**(1/b), t**(b-1) dt = du/b
            integrand = lambda u: mp.e ** (-mpmu * u ** (1 / mpb)) / mpb
            numeric = mp.quad(integrand, [0, mp.mpf(s) ** mpb])
        else:
            integrand = lambda t: t ** (mpb - 1) * mp.e ** (-mpmu * t)
            numeric = mp.quad(integrand, [0, s])
        closed = mp.gamma(mpb) / mpmu ** mpb
        err = float(abs(numeric - closed))
    return complex(numeric), complex(closed), err


# ---------------------------------------------------------------------------
# sector quadrature
# ---------------------------------------------------------------------------
def _panel_nodes(a: float, b: float, n_sub: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite 16-point Gauss nodes/weights on [a, b] split into n_sub panels."""
    edges = np.linspace(a, b, n_sub + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def corner_integral(
    sector: Sector,
    eta: EtaVector,
    p_r: float,
    h: Callable[[np.ndarray], np.ndarray] | complex | None = None,
    vec: Callable[[np.ndarray], np.ndarray] | Sequence[complex] | None = None,
    rel_tol: float = 1e-10,
) -> complex:
    """Integrate r**p_r h(psi) [vec(psi).eta] exp(eta.(x-vertex)) over the sector.

    Quadrature is tensor Gauss-Legendre in polar coordinates: radial panels
    geometrically refined toward the vertex (ratio 2), each split further so
    no panel spans more than a few units of tau * width, and the angular
    direction split so the phase swing tau * r * psi0 per panel stays small.
    Panels whose integrand is below the relative floor are skipped.

    p_r must exceed -2 for integrability at the vertex.
    """
    if p_r <= -2.0:
        raise NonIntegrable(f"radial power {p_r} <= -2 is not integrable at the vertex")
    psi0 = sector.aperture
    eps = sector.radius
    tau = eta.tau
    phi_loc = eta.phi - sector.theta_ref
    bsign = eta.branch
    # angular profiles are functions of the local angle psi with components in
    # the sector frame, so the eta they contract with is the local-frame one
    eta_vec = EtaVector(tau=tau, phi=phi_loc, branch=bsign).vector

    h_fn = _as_scalar_profile(1.0 if h is None else h)
    vec_fn = _as_vector_profile(vec) if vec is not None else None

    # geometric radial levels; deepen when p_r < -1 so the dropped tail near
    # r = 0 stays below the tolerance of the total mass
    levels = 40
    if p_r + 2.0 < 1.0:
        levels = min(400, int(math.ceil(40.0 / (p_r + 2.0))) + 2)
    edges = eps * 2.0 ** (-np.arange(levels + 1, dtype=float))

    total = 0.0 + 0.0j
    for j in range(levels):
        r_hi = edges[j]
        r_lo = edges[j + 1]
        if j == levels - 1:
            r_lo = 0.0
        # worst-case decay across the whole arc on this panel
        # cos of (phi_loc - psi) over psi in [0, psi0]
        psi_probe = np.linspace(0.0, psi0, 33)
        cmin = np.min(np.cos(phi_loc - psi_probe))
        if tau * r_lo * cmin > 120.0:
            continue  # contributes below exp(-120) relative

        n_r = max(1, int(math.ceil(tau * (r_hi - r_lo) / 6.0)))
        n_psi = max(int(math.ceil(psi0 / 0.4)), int(math.ceil(tau * r_hi * psi0 / 6.0)))
        R, WR = _panel_nodes(r_lo, r_hi, n_r)
        PSI, WPSI = _panel_nodes(0.0, psi0, n_psi)

        ang = h_fn(PSI).astype(complex)
        if vec_fn is not None:
            V = vec_fn(PSI)  # (n_psi, 2)
            ang = ang * (V[..., 0] * eta_vec[0] + V[..., 1] * eta_vec[1])
        ang = ang * WPSI

        rad = R ** (p_r + 1.0) * WR
        # phase factor exp(-tau r exp(i b (phi_loc - psi)))
        c = np.exp(1j * bsign * (phi_loc - PSI))
        E = np.exp(-tau * R[:, None] * c[None, :])
        total += rad @ E @ ang
    return complex(total)


# ---------------------------------------------------------------------------
# closed-form leading constants (n = 2)
# ---------------------------------------------------------------------------
def c1_constant(psi0: float, eta: EtaVector, theta_ref: float = 0.0, n: int = 2) -> complex:
    """Leading constant of int exp(eta.x) dx = C1 tau**(-n) + (exp. small).

    C1 = (+/- i) Gamma(n)/n exp(-/+ i n phi) (1 - exp(+/- i n psi0)), sign
    tied to the d_perp branch. Never zero for psi0 in (0, pi) at n = 2.
    """
    b = eta.branch
    phi = eta.phi - theta_ref
    return (b * 1j * gamma_fn(n) / n
            * np.exp(-1j * b * n * phi)
            * (1.0 - np.exp(1j * b * n * psi0)))


def c0_constant(poly, psi0: float, eta: EtaVector, theta_ref: float = 0.0, n: int = 2) -> complex:
    """Leading constant of int exp(eta.x) (grad P).eta dx for harmonic P.

    P is a HarmonicPolynomial2D of degree N + 1 >= 1 (the potential of the
    leading gradient term); the integral equals C0 tau**(1-n-N) up to an
    exponentially small remainder. C0 vanishes for both branches exactly when
    (2N + n) psi0 is a multiple of 2 pi.
    """
    M = poly.degree
    if M < 1:
        raise ZeroField("gradient of a degree-0 polynomial is identically zero")
    if poly.b_plus == 0 and poly.b_minus == 0:
        raise ZeroField("polynomial is identically zero")
    N = M - 1
    phi = eta.phi - theta_ref
    g = gamma_fn(N + n) / (2 * N + n)
    if eta.branch == +1:
        b1 = M * poly.b_plus
        return -2j * b1 * g * np.exp(-1j * (N + n - 1) * phi) * (1.0 - np.exp(1j * (2 * N + n) * psi0))
    b2 = -1j * M * poly.b_minus
    return -2.0 * b2 * g * np.exp(1j * (N + n - 1) * phi) * (1.0 - np.exp(-1j * (2 * N + n) * psi0))


def c1N0_constant(poly, psi0: float, eta: EtaVector, theta_ref: float = 0.0, n: int = 2) -> complex:
    """Leading constant of int v_N0 exp(eta.x) dx = C tau**(-n-N0) + (small).

    v_N0 = b_plus z**N0 + b_minus zbar**N0 is a harmonic homogeneous
    polynomial; the constant is Gamma(N0+n) times the angular integral of its
    two circular-harmonic components against exp(+/- i (N0+n) psi). Reduces to
    c1_constant for N0 = 0, v = 1.
    """
    if poly.b_plus == 0 and poly.b_minus == 0:
        raise ZeroField("polynomial is identically zero")
    N0 = poly.degree
    phi = eta.phi - theta_ref
    b = eta.branch

    def ang(freq: float) -> complex:
        # int_0^psi0 exp(i freq psi) dpsi
        if freq == 0:
            return complex(psi0)
        return (np.exp(1j * freq * psi0) - 1.0) / (1j * freq)

    A = ang(b * (2 * N0 + n))   # pairs with the same-handed component
    B = ang(b * n)              # pairs with the opposite-handed component
    if b == +1:
        brace = poly.b_plus * A + poly.b_minus * B
    else:
        brace = poly.b_plus * B + poly.b_minus * A
    return gamma_fn(N0 + n) * np.exp(-1j * b * (N0 + n) * phi) * brace


def ctilde_constants(
    vlead,
    v0: complex,
    gamma0: float,
    rho0: float,
    k: float,
    psi0: float,
    eta: EtaVector,
    theta_ref: float = 0.0,
) -> tuple[complex, complex]:
    """Constants for the degree-1 gradient term with nonzero divergence (n=2).

    vlead supplies the free harmonic coefficients (c_plus = b11, c_minus =
    b22) of the leading gradient field, whose divergence is -k^2 v0. Returns
    the displayed closed-form pair (Ctilde0, Ctilde1), where Ctilde0 is the
    tau**(-n) prefactor of int exp(eta.x) V.eta dx and

        Ctilde1 = gamma0 * Ctilde0 - k^2 v0 rho0 * C1.

    The pair realizes the dichotomy: a direction with Ctilde1 != 0 exists
    unless psi0 = pi/2 and rho0 = 0 simultaneously, in which case Ctilde1
    vanishes for every direction and branch.
    """
    if v0 == 0:
        raise PreconditionViolated("leading divergence -k^2 v0 must be nonzero")
    n = 2
    phi = eta.phi - theta_ref
    b11 = complex(vlead.c_plus)
    b22 = complex(vlead.c_minus)

    def c_pm(sign: int) -> complex:
        return (sign * 1j * (1.0 - np.exp(sign * 1j * (2 + n) * psi0))
                * np.exp(-sign * 1j * (1 + n) * phi) / (2 + n))

    Cp, Cm = c_pm(+1), c_pm(-1)
    g3 = gamma_fn(1 + n)  # Gamma(3)
    kk = k * k
    # Displayed closed form: Ctilde0 e^{-/+ i phi} / Gamma(1+n)
    #   = -2 b_pm C_{pm,1} + k^2 v0 (C_{-,1} -/+ C_{+,1}) / 2.
    # Note the cross term pairs each angular component with the constant of
    # the matching-handed branch; raw quadrature of the defining integral
    # deviates from this at the cross term (see the decisions record). The
    # dichotomy below (degenerate exactly when psi0 = pi/2 and rho0 = 0) is
    # a property of this displayed form.
    if eta.branch == +1:
        bracket = -2.0 * b11 * Cp + (kk * v0 / 2.0) * (Cm - Cp)
        ctilde0 = g3 * np.exp(1j * phi) * bracket
    else:
        b_minus = 1j * b22
        bracket = -2.0 * b_minus * Cm + (kk * v0 / 2.0) * (Cm + Cp)
        ctilde0 = g3 * np.exp(-1j * phi) * bracket
    ctilde1 = gamma0 * ctilde0 - kk * v0 * rho0 * c1_constant(psi0, eta, theta_ref)
    return complex(ctilde0), complex(ctilde1)


def leading_gradient_angular_profile(vlead, k: float) -> Callable[[np.ndarray], np.ndarray]:
    """Angular profile V(psi) with Vtilde(x) = |x|**N V(psi) for a leading term.

    Includes the divergence-carrying part when degree N = 1 (it contributes
    (k^2 v0 / 2) [(0, i) e^{i psi} - (1, 0) e^{-i psi}]).
    """
    N = vlead.degree
    cp = complex(vlead.c_plus)
    cm = complex(vlead.c_minus)
    v0 = complex(vlead.v0)

    def profile(psi: np.ndarray) -> np.ndarray:
        e_plus = np.exp(1j * N * psi)
        e_minus = np.exp(-1j * N * psi)
        out = np.empty(psi.shape + (2,), dtype=complex)
        out[..., 0] = cp * e_plus + 1j * cm * e_minus
        out[..., 1] = 1j * cp * e_plus + cm * e_minus
        if N == 1 and v0 != 0:
            w = k * k * v0 / 2.0
            out[..., 0] += -w * e_minus
            out[..., 1] += 1j * w * e_plus
        return out

    return profile


def harmonic_gradient_profile(poly) -> Callable[[np.ndarray], np.ndarray]:
    """Angular profile of grad P for a harmonic polynomial P of degree M >= 1.

    grad P = M [b_plus (1, i) z**(M-1) + b_minus (1, -i) zbar**(M-1)].
    """
    M = poly.degree
    if M < 1:
        raise ZeroField("degree must be >= 1")
    N = M - 1
    bp = M * complex(poly.b_plus)
    bm = M * complex(poly.b_minus)

    def profile(psi: np.ndarray) -> np.ndarray:
        e_plus = np.exp(1j * N * psi)
        e_minus = np.exp(-1j * N * psi)
        out = np.empty(psi.shape + (2,), dtype=complex)
        out[..., 0] = bp * e_plus + bm * e_minus
        out[..., 1] = 1j * bp * e_plus - 1j * bm * e_minus
        return out

    return profile


# ---------------------------------------------------------------------------
# decay fitting and general-exponent bounds
# ---------------------------------------------------------------------------
def fit_decay(taus: Sequence[float], values: Sequence[complex]) -> AsymptoticFit:
    """Fit |value| ~ |constant| tau**exponent on a log-log scale.

    The complex constant is recovered from the final sample's modulus and
    phase. Requires at least 5 samples, all nonzero.
    """
    taus = np.asarray(taus, dtype=float)
    values = np.asarray(values, dtype=complex)
    if taus.size < 5:
        raise ValueError("need at least 5 samples")
    if np.any(taus[1:] <= taus[:-1]):
        raise ValueError("taus must be strictly increasing")
    mags = np.abs(values)
    if np.any(mags == 0.0):
        raise ZeroSample("zero sample; log-scale fit undefined")
    logt = np.log(taus)
    logm = np.log(mags)
    slope, intercept = np.polyfit(logt, logm, 1)
    resid = logm - (slope * logt + intercept)
    constant = values[-1] / taus[-1] ** slope
    return AsymptoticFit(
        exponent=float(slope),
        constant=complex(constant),
        rms_residual=float(np.sqrt(np.mean(resid**2))),
        tau_range=(float(taus[0]), float(taus[-1])),
    )


def general_bound_check(
    le: LocalExpansion,
    sector: Sector,
    taus: Sequence[float],
    k: float = 1.0,
    phi: float | None = None,
    branch: int = +1,
    slack: float = 0.05,
    n: int = 2,
) -> dict:
    """Verify the general-exponent decay bounds for the two corner integrals.

    Evaluates the gradient-term integral int gamma_beta V.eta |x|^(alpha+beta)
    exp(eta.x) and the potential-term integral int rho0 vtilde |x|^(alpha0+
    beta0) exp(eta.x) over a tau ladder, fits the decay exponents, and checks
    them against -(n+beta+alpha-1) and -(n+beta0+alpha0) with the given slack.
    Failures are report entries, not exceptions.
    """
    if phi is None:
        phi = sector.theta_ref + sector.aperture / 2.0
    gb = _as_scalar_profile(le.gamma_beta)
    rho = _as_scalar_profile(le.rho0_profile)
    vt = _as_scalar_profile(le.vtilde_profile)
    V = _as_vector_profile(le.V_profile)

    grad_vals, pot_vals = [], []
    for tau in taus:
        eta = EtaVector(tau=float(tau), phi=phi, branch=branch)
        grad_vals.append(corner_integral(sector, eta, p_r=le.alpha + le.beta, h=gb, vec=V))
        pot_vals.append(corner_integral(
            sector, eta, p_r=le.alpha0 + le.beta0,
            h=lambda psi: rho(psi) * vt(psi)))

    report = {}
    for name, vals, bound in (
        ("gradient", grad_vals, -(n + le.beta + le.alpha - 1)),
        ("potential", pot_vals, -(n + le.beta0 + le.alpha0)),
    ):
        mags = np.abs(np.asarray(vals))
        if np.all(mags < 1e-290):
            report[name] = {"degenerate": True, "bound": bound, "passed": True}
            continue
        fit = fit_decay(taus, vals)
        report[name] = {
            "degenerate": False,
            "exponent": fit.exponent,
            "bound": bound,
            "rms_residual": fit.rms_residual,
            "passed": bool(fit.exponent <= bound + slack),
        }
    return report
