"""Corner geometry: truncated sectors, probe-direction cones, convex polygons,
and the exceptional-aperture arithmetic.

All angles are radians, stored as doubles. Apertures of convex corners lie in
(0, pi). Sectors are open sets: boundary points classify as outside, which is
harmless because membership only feeds quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyDirectionCone, EpsilonTooLarge

TWO_PI = 2.0 * math.pi

# Relative tolerance for deciding that an aperture is a rational multiple of
# pi. Floating-point inputs cannot encode irrationality, so the classifier is
# explicitly tolerance-based.
ANGLE_RATIONAL_RTOL = 1e-12


def _wrap_angle(theta: float) -> float:
    """Wrap to [0, 2*pi)."""
    return theta % TWO_PI


@dataclass(frozen=True)
class Sector:
    """Open truncated cone: vertex, first-edge orientation, aperture, radius."""

    vertex: tuple[float, float]
    theta_ref: float
    aperture: float
    radius: float

    def __post_init__(self):
        if not 0.0 < self.aperture < math.pi:
            raise ValueError(f"aperture must lie in (0, pi), got {self.aperture}")
        if self.radius <= 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    @property
    def bisector_angle(self) -> float:
        return self.theta_ref + self.aperture / 2.0

    def edge_directions(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit vectors along the two extreme rays."""
        a, b = self.theta_ref, self.theta_ref + self.aperture
        return (np.array([math.cos(a), math.sin(a)]),
                np.array([math.cos(b), math.sin(b)]))


def sector_contains(s: Sector, x) -> bool:
    """True iff x lies strictly inside the open truncated cone."""
    dx = float(x[0]) - s.vertex[0]
    dy = float(x[1]) - s.vertex[1]
    r = math.hypot(dx, dy)
    if r <= 0.0 or r >= s.radius:
        return False
    psi = _wrap_angle(math.atan2(dy, dx) - s.theta_ref)
    return 0.0 < psi < s.aperture


def sector_mask(s: Sector, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Vectorized membership over coordinate arrays."""
    dx = X - s.vertex[0]
    dy = Y - s.vertex[1]
    r = np.hypot(dx, dy)
    psi = np.mod(np.arctan2(dy, dx) - s.theta_ref, TWO_PI)
    return (r > 0.0) & (r < s.radius) & (psi > 0.0) & (psi < s.aperture)


@dataclass(frozen=True)
class DirectionCone:
    """Directions d with d . xhat > delta for every xhat in the sector arc.

    By convexity it suffices to check the two extreme rays, which the sampler
    asserts for every direction it returns. Nonempty only when
    delta < cos(aperture/2).
    """

    sector: Sector
    delta: float

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")

    def is_empty(self) -> bool:
        return self.delta >= math.cos(self.sector.aperture / 2.0)

    def angle_window(self) -> tuple[float, float]:
        """Open interval of admissible direction angles, relative to theta_ref."""
        if self.is_empty():
            raise EmptyDirectionCone(
                f"delta={self.delta} >= cos(aperture/2)={math.cos(self.sector.aperture / 2):.6g}"
            )
        half = math.acos(self.delta)
        return self.sector.aperture - half, half


def direction_samples(dc: DirectionCone, m: int) -> list[np.ndarray]:
    """m unit directions spread through the admissible window.

    Raises EmptyDirectionCone when no direction can satisfy the bound. Each
    returned d is checked against both extreme rays.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    lo, hi = dc.angle_window()  # raises if empty
    s = dc.sector
    e0, e1 = s.edge_directions()
    out = []
    for i in range(m):
        phi_rel = lo + (i + 0.5) * (hi - lo) / m
        phi = s.theta_ref + phi_rel
        d = np.array([math.cos(phi), math.sin(phi)])
        # exact assertion at the two extreme rays
        if not (d @ e0 > dc.delta and d @ e1 > dc.delta):
            raise EmptyDirectionCone(
                f"sampled direction phi={phi:.6g} fails the edge-ray bound"
            )
        out.append(d)
    return out


def exceptional_angle(psi0: float, N: int,
                      rtol: float = ANGLE_RATIONAL_RTOL) -> int | None:
    """Return l >= 1 with psi0 * (1 + N) = l * pi, within tolerance, else None.

    These are the aperture/degree pairs for which the leading corner-integral
    constant can vanish for both transverse branches. rtol is only meant to be
    loosened for apertures read from low-precision config input.
    """
    if not 0.0 < psi0 < math.pi:
        raise ValueError("psi0 must lie in (0, pi)")
    if N < 0:
        raise ValueError("N must be a nonnegative integer")
    ratio = psi0 * (1 + N) / math.pi
    l = round(ratio)
    if l >= 1 and abs(ratio - l) <= rtol * max(1.0, abs(ratio)):
        return l
    return None


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon, vertices counter-clockwise."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.shape[0] < 3 or v.shape[1] != 2:
            raise ValueError("need at least 3 planar vertices")
        n = v.shape[0]
        for i in range(n):
            p, q, r = v[i], v[(i + 1) % n], v[(i + 2) % n]
            cross = (q[0] - p[0]) * (r[1] - q[1]) - (q[1] - p[1]) * (r[0] - q[0])
            if cross <= 0.0:
                raise ValueError(
                    "vertices must be strictly convex and counter-clockwise "
                    f"(violation at index {(i + 1) % n})"
                )

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    def edge_lengths(self) -> np.ndarray:
        v = self.as_array()
        return np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)

    def interior_angles(self) -> np.ndarray:
        v = self.as_array()
        n = len(v)
        out = np.empty(n)
        for i in range(n):
            e_next = v[(i + 1) % n] - v[i]
            e_prev = v[(i - 1) % n] - v[i]
            ang = _wrap_angle(math.atan2(e_prev[1], e_prev[0]) - math.atan2(e_next[1], e_next[0]))
            out[i] = ang
        return out

    def contains(self, x) -> bool:
        """Strict interior membership (half-plane test on each edge)."""
        v = self.as_array()
        n = len(v)
        px, py = float(x[0]), float(x[1])
        for i in range(n):
            qx, qy = v[(i + 1) % n] - v[i]
            rx, ry = px - v[i][0], py - v[i][1]
            if qx * ry - qy * rx <= 0.0:
                return False
        return True

    def contains_mask(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        v = self.as_array()
        n = len(v)
        mask = np.ones(np.broadcast(X, Y).shape, dtype=bool)
        for i in range(n):
            qx, qy = v[(i + 1) % n] - v[i]
            mask &= (qx * (Y - v[i][1]) - qy * (X - v[i][0])) > 0.0
        return mask

    def signed_distance(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Negative inside, positive outside (distance to the boundary)."""
        v = self.as_array()
        n = len(v)
        d2 = np.full(np.broadcast(X, Y).shape, np.inf)
        for i in range(n):
            a, b = v[i], v[(i + 1) % n]
            ab = b - a
            t = ((X - a[0]) * ab[0] + (Y - a[1]) * ab[1]) / (ab @ ab)
            t = np.clip(t, 0.0, 1.0)
            d2 = np.minimum(d2, (X - a[0] - t * ab[0]) ** 2 + (Y - a[1] - t * ab[1]) ** 2)
        dist = np.sqrt(d2)
        return np.where(self.contains_mask(X, Y), -dist, dist)


def corner_sectors(p: ConvexPolygon, eps: float) -> list[Sector]:
    """One sector per vertex, edges along the incident polygon edges.

    eps must be smaller than half the shortest edge so the sectors can't
    swallow a neighboring vertex.
    """
    min_edge = float(p.edge_lengths().min())
    if eps >= 0.5 * min_edge:
        raise EpsilonTooLarge(f"eps={eps} >= half shortest edge {0.5 * min_edge:.6g}")
    v = p.as_array()
    n = len(v)
    sectors = []
    for i in range(n):
        e_next = v[(i + 1) % n] - v[i]
        e_prev = v[(i - 1) % n] - v[i]
        theta_ref = math.atan2(e_next[1], e_next[0])
        aperture = _wrap_angle(math.atan2(e_prev[1], e_prev[0]) - theta_ref)
        sectors.append(Sector(vertex=(v[i][0], v[i][1]), theta_ref=theta_ref,
                              aperture=aperture, radius=eps))
    return sectors
