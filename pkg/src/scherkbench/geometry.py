"""Exact-formula geometry of the model surface.

The model is the open unit disk |z| < 1 carrying the conformal metric

    ds = (2 / sqrt(-kappa)) * |dz| / (1 - |z|^2),

a complete simply connected surface of constant Gauss curvature kappa < 0.
All operations below (distances, geodesics, Busemann functions, horocycles,
Fermi coordinates) have closed forms in this chart; everything is computed
through disk automorphisms so that ideal points never enter as "points at
radius one".

Internally we work in standard units (kappa = -1) and rescale: distances and
Busemann values in curvature kappa are the standard ones divided by
sqrt(-kappa).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

# Geometric root finding / chart tolerances.
CHART_TOL = 1e-12


class GeometryError(ValueError):
    """Invalid geometric input (point outside the disk, coincident data...)."""


def _atanh(x: float) -> float:
    return 0.5 * math.log((1.0 + x) / (1.0 - x))


def mobius(w: complex, z: complex) -> complex:
    """Disk automorphism sending 0 to w: z -> (z + w) / (1 + conj(w) z)."""
    return (z + w) / (1.0 + w.conjugate() * z)


@dataclass(frozen=True)
class Metric:
    """Constant-curvature metric on the unit-disk chart."""

    kappa: float = -1.0

    def __post_init__(self):
        if not (self.kappa < 0.0):
            raise GeometryError(f"curvature must be negative, got {self.kappa}")

    @property
    def scale(self) -> float:
        """sqrt(-kappa); standard-unit lengths divide by this."""
        return math.sqrt(-self.kappa)

    def conformal_factor(self, z: complex) -> float:
        r2 = (z * z.conjugate()).real
        if r2 >= 1.0:
            raise GeometryError("point on or outside the unit circle")
        return 2.0 / (self.scale * (1.0 - r2))


@dataclass(frozen=True)
class SurfacePoint:
    """Point of the surface in chart coordinates."""

    x: float
    y: float

    def __post_init__(self):
        if self.x * self.x + self.y * self.y >= 1.0:
            raise GeometryError(f"({self.x}, {self.y}) is not inside the unit disk")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @staticmethod
    def from_complex(z: complex) -> "SurfacePoint":
        return SurfacePoint(z.real, z.imag)


@dataclass(frozen=True)
class IdealPoint:
    """Boundary-at-infinity point, given by its angle on the unit circle."""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", self.theta % TWO_PI)

    @property
    def z(self) -> complex:
        return cmath.exp(1j * self.theta)


def _as_chart(p) -> complex:
    if isinstance(p, SurfacePoint):
        return p.z
    if isinstance(p, complex):
        return p
    return complex(p[0], p[1])


def distance(p: SurfacePoint, q: SurfacePoint, metric: Metric = Metric()) -> float:
    """Riemannian distance between two interior points."""
    zp, zq = _as_chart(p), _as_chart(q)
    if abs(zp) >= 1.0 or abs(zq) >= 1.0:
        raise GeometryError("distance arguments must lie inside the unit disk")
    t = abs(zp - zq) / abs(1.0 - zp.conjugate() * zq)
    return 2.0 * _atanh(t) / metric.scale


def busemann(xi: IdealPoint, p: SurfacePoint, metric: Metric = Metric()) -> float:
    """Busemann function of xi, normalized to vanish at the chart origin.

    Along the unit-speed geodesic from the origin toward xi the value is -s.
    """
    z = _as_chart(p)
    w = xi.z
    num = (abs(w - z)) ** 2
    den = 1.0 - (z * z.conjugate()).real
    return math.log(num / den) / metric.scale


def gromov_term(x: IdealPoint, y: IdealPoint, metric: Metric = Metric()) -> float:
    """B_x(p) + B_y(p) for p on the geodesic joining x and y.

    The sum is constant along that geodesic; it equals the (signed) gap
    between the level-0 horocycles at x and y, and is always <= 0.  Closed
    form 2 log sin(gap/2) in standard units, stable down to tiny angular gaps.
    """
    delta = (y.theta - x.theta) % TWO_PI
    s = math.sin(0.5 * delta)
    if s <= 0.0:
        raise GeometryError("gromov_term needs two distinct ideal points")
    return 2.0 * math.log(s) / metric.scale


@dataclass(frozen=True)
class Geodesic:
    """Complete unit-speed geodesic, realized through a disk automorphism.

    The map M(z) = (lam*z + base) / (1 + conj(base)*lam*z) carries the real
    diameter onto the geodesic; arclength s corresponds to the diameter
    parameter tanh(sqrt(-kappa)*s/2).  M(-1) is the backward ideal endpoint,
    M(+1) the forward one.
    """

    lam: complex
    base: complex
    metric: Metric = Metric()
    start: object = None  # SurfacePoint | IdealPoint at s -> -inf or s = s_start
    end: object = None

    def map(self, z: complex) -> complex:
        return mobius(self.base, self.lam * z)

    def inverse_map(self, w: complex) -> complex:
        return mobius(-self.base, w) / self.lam

    def point_chart(self, s: float) -> complex:
        return self.map(math.tanh(0.5 * self.metric.scale * s))

    def point(self, s: float) -> SurfacePoint:
        return SurfacePoint.from_complex(self.point_chart(s))

    def param_of(self, p) -> float:
        """Arclength parameter of a point assumed to lie on the geodesic."""
        u = self.inverse_map(_as_chart(p))
        return 2.0 * _atanh(min(max(u.real, -1.0 + 1e-300), 1.0 - 1e-300)) / self.metric.scale

    def ideal_endpoints(self) -> tuple[IdealPoint, IdealPoint]:
        zb = self.map(-1.0 + 0.0j)
        zf = self.map(1.0 + 0.0j)
        return IdealPoint(cmath.phase(zb)), IdealPoint(cmath.phase(zf))


def geodesic_between(a, b, metric: Metric = Metric()) -> Geodesic:
    """The unique oriented unit-speed geodesic from a to b.

    Parametrization: for two ideal endpoints, s = 0 sits at the point of the
    geodesic closest to the chart origin; otherwise s = 0 sits at the first
    interior argument.
    """
    a_ideal = isinstance(a, IdealPoint)
    b_ideal = isinstance(b, IdealPoint)
    if a_ideal and b_ideal:
        if abs((a.theta - b.theta) % TWO_PI) < CHART_TOL or abs(a.z - b.z) < CHART_TOL:
            raise GeometryError("ideal endpoints coincide")
        m = _closest_point_to_origin(a.z, b.z)
        lam = mobius(-m, b.z)
        lam /= abs(lam)
        return Geodesic(lam, m, metric, start=a, end=b)
    if not a_ideal and not b_ideal:
        za, zb = _as_chart(a), _as_chart(b)
        if abs(za - zb) < CHART_TOL:
            raise GeometryError("degenerate geodesic: endpoints coincide")
        u = mobius(-za, zb)
        lam = u / abs(u)
        return Geodesic(lam, za, metric, start=a, end=b)
    if not a_ideal and b_ideal:
        za = _as_chart(a)
        lam = mobius(-za, b.z)
        lam /= abs(lam)
        return Geodesic(lam, za, metric, start=a, end=b)
    # a ideal, b interior: base point at b, backward endpoint a.
    zb = _as_chart(b)
    lam = -mobius(-zb, a.z)
    lam /= abs(lam)
    return Geodesic(lam, zb, metric, start=a, end=b)


def _closest_point_to_origin(za: complex, zb: complex) -> complex:
    """Chart point of the ideal-to-ideal geodesic nearest the origin."""
    if abs(za + zb) < 1e-14:  # diameter
        return 0.0 + 0.0j
    # Circle orthogonal to the unit circle through za, zb: Re(conj(c) z) = 1.
    ax, ay = za.real, za.imag
    bx, by = zb.real, zb.imag
    det = ax * by - ay * bx
    if abs(det) < 1e-16:
        return 0.0 + 0.0j
    cx = (by - ay) / det
    cy = (ax - bx) / det
    c = complex(cx, cy)
    r = math.sqrt((c * c.conjugate()).real - 1.0)
    return c * (1.0 - r / abs(c))


def oriented_D(a: SurfacePoint, b, c: SurfacePoint, metric: Metric = Metric()) -> float:
    """Difference of oriented distances to horospheres at b.

    For interior b this is d(c,b) - d(a,b); for ideal b it is the Busemann
    function of b renormalized to vanish at a.  Negative values mean c lies
    strictly inside the horoball through a.
    """
    if isinstance(b, IdealPoint):
        return busemann(b, c, metric) - busemann(b, a, metric)
    return distance(c, b, metric) - distance(a, b, metric)


@dataclass(frozen=True)
class Horocycle:
    """Horocycle at an ideal point.

    `level` is the signed inward shift: the horocycle meets the geodesic from
    the chart origin toward `xi` at arclength `level`, i.e. it is the Busemann
    level set {B_xi = -level}.  Larger level means a smaller horodisk.
    """

    xi: IdealPoint
    level: float
    metric: Metric = Metric()

    def busemann_value(self) -> float:
        return -self.level

    def chart_circle(self) -> tuple[complex, float]:
        """Euclidean (center, radius) of the horocycle in the chart."""
        ls = self.level * self.metric.scale
        r = 1.0 / (1.0 + math.exp(ls))
        return (1.0 - r) * self.xi.z, r

    def contains(self, p: SurfacePoint) -> bool:
        """True if p is inside the (open) horodisk."""
        return busemann(self.xi, p, self.metric) < -self.level


def dist_horocycles(h1: Horocycle, h2: Horocycle) -> float:
    """Signed gap between two horocycles at distinct ideal points.

    Positive iff the horocycles are disjoint; computed from the linearity of
    the Busemann functions along the connecting geodesic.  Overlapping
    horocycles give the negative of the overlap depth.
    """
    if abs(h1.xi.z - h2.xi.z) < CHART_TOL:
        raise GeometryError(
            "concentric horocycles: distance is the level difference, "
            "use abs(h1.level - h2.level)"
        )
    metric = h1.metric
    c = gromov_term(h1.xi, h2.xi, metric)
    return h1.level + h2.level + c


def horocycle_intersection_count(h1: Horocycle, h2: Horocycle) -> int:
    """Number of chart intersection points of two horocycles (0, 1 or 2)."""
    c1, r1 = h1.chart_circle()
    c2, r2 = h2.chart_circle()
    if abs(c1 - c2) < CHART_TOL and abs(r1 - r2) < CHART_TOL:
        raise GeometryError("identical horocycles")
    if abs(h1.xi.z - h2.xi.z) < CHART_TOL:
        # same ideal point: the chart circles touch only at infinity
        return 0
    d = abs(c1 - c2)
    tol = 1e-9
    if d > r1 + r2 + tol or d < abs(r1 - r2) - tol:
        return 0
    if abs(d - (r1 + r2)) <= tol or abs(d - abs(r1 - r2)) <= tol:
        return 1
    return 2


def point_on_horocycle(h: Horocycle, phi: float) -> SurfacePoint:
    """Point of the horocycle at Euclidean angle phi around its chart center."""
    c, r = h.chart_circle()
    z = c + r * cmath.exp(1j * phi)
    if abs(z) >= 1.0:
        z *= (1.0 - 1e-15) / abs(z)
    return SurfacePoint.from_complex(z)


def angle_of(p0: SurfacePoint, xi: IdealPoint) -> float:
    """Chart angle at p0 of the unit tangent pointing toward xi.

    Monotone bijection between ideal angles and tangent directions; the
    identity when p0 is the origin.
    """
    z0 = _as_chart(p0)
    u = mobius(-z0, xi.z)
    return cmath.phase(u) % TWO_PI


def ideal_from_angle(p0: SurfacePoint, alpha: float) -> IdealPoint:
    """Inverse of angle_of: the ideal endpoint of the ray from p0 at angle alpha."""
    z0 = _as_chart(p0)
    w = mobius(z0, cmath.exp(1j * alpha))
    return IdealPoint(cmath.phase(w))


def signed_distance_to_geodesic(g: Geodesic, p) -> float:
    """Signed distance from p to g; positive on the left of the orientation."""
    w = g.inverse_map(_as_chart(p))
    val = 2.0 * w.imag / (1.0 - (w * w.conjugate()).real)
    return math.asinh(val) / g.metric.scale


@dataclass(frozen=True)
class FermiChart:
    """Fermi coordinates (s, t) along a complete geodesic gamma.

    t is arclength along gamma, s the signed arclength along the perpendicular
    geodesic (positive to the left of gamma).  The metric is ds^2 + G(s,t)dt^2
    with G = cosh^2(sqrt(-kappa) s) for the constant-curvature model; a
    user-supplied G(s, t) may replace it to exercise warped-product metrics in
    the profile machinery.
    """

    gamma: Geodesic
    G: object = None  # optional callable (s, t) -> metric coefficient

    @property
    def metric(self) -> Metric:
        return self.gamma.metric

    def point_chart(self, s: float, t: float) -> complex:
        scale = self.metric.scale
        x0 = math.tanh(0.5 * scale * t)
        u = mobius(x0, 1j * math.tanh(0.5 * scale * s))
        return self.gamma.map(u)

    def point(self, s: float, t: float) -> SurfacePoint:
        return SurfacePoint.from_complex(self.point_chart(s, t))

    def coords(self, p) -> tuple[float, float]:
        """Fermi coordinates (s, t) of a chart point."""
        w = self.gamma.inverse_map(_as_chart(p))
        scale = self.metric.scale
        s = math.asinh(2.0 * w.imag / (1.0 - (w * w.conjugate()).real)) / scale
        re, im = w.real, w.imag
        r2 = re * re + im * im
        if abs(re) < 1e-15:
            t = 0.0
        else:
            c = (r2 + 1.0) / (2.0 * re)
            x0 = c - math.copysign(math.sqrt(c * c - 1.0), c)
            t = 2.0 * _atanh(x0) / scale
        return s, t


def fermi_G(chart: FermiChart, s: float, t: float) -> float:
    """Metric coefficient G(s,t) = <d/dt, d/dt> of the Fermi parametrization."""
    if chart.G is not None:
        return chart.G(s, t)
    return math.cosh(chart.metric.scale * s) ** 2
