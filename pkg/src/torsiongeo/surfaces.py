"""Surfaces of revolution with their flat vectorial connection.

A profile curve (r(s), h(s)) in natural parametrization generates the
surface (r cos phi, r sin phi, h) with first fundamental form
diag(1, r^2).  Declaring tangent vectors parallel when they make equal
angles with the meridians yields a flat metric connection whose defining
vector field is (r'/r) e1 = -grad(-ln r); its geodesics are loxodromes.

Catalog construction is pure; all evaluators are safe for concurrent reads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .audit import make_report, series_derivative, InvariantReport
from .errors import ChartDomainError
from .geometry import ChartGeometry, OrthoFrame, VectorFieldSpec
from .integrate import Trace


# ---------------------------------------------------------------------------
# Arc-length reparametrization of profile curves
# ---------------------------------------------------------------------------


class ArcLengthParam:
    """Invertible map between a curve parameter t and arc length s.

    Cumulative lengths are tabulated on a fine grid with 10-point
    Gauss-Legendre quadrature per cell (effectively exact for smooth
    speeds) and inverted by a bracketed Newton iteration to 1e-12.
    Consecutive inversions warm-start from the previous solution, which
    the integrator's nearby stage points turn into one or two iterations.
    """

    _GL = tuple(zip(*(arr.tolist() for arr in np.polynomial.legendre.leggauss(10))))

    def __init__(self, speed: Callable[[float], float], t_min: float, t_max: float,
                 n_grid: int = 1600, t_anchor: float | None = None):
        self.speed = speed
        self.t_min = float(t_min)
        self.t_max = float(t_max)
        self.grid = np.linspace(t_min, t_max, n_grid + 1)
        cells = np.array([self._cell(self.grid[i], self.grid[i + 1])
                          for i in range(n_grid)])
        cum = np.concatenate([[0.0], np.cumsum(cells)])
        if t_anchor is None:
            t_anchor = t_min
        self.cum = cum - np.interp(t_anchor, self.grid, cum)
        self._step = (self.t_max - self.t_min) / n_grid
        self._last: tuple[float, float] | None = None

    def _cell(self, a: float, b: float) -> float:
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        sp = self.speed
        total = 0.0
        for x, w in self._GL:
            total += w * sp(mid + half * x)
        return half * total

    @property
    def s_range(self) -> tuple[float, float]:
        return (float(self.cum[0]), float(self.cum[-1]))

    def s_of_t(self, t: float) -> float:
        i = int((t - self.t_min) / self._step)
        i = min(max(i, 0), len(self.grid) - 2)
        return float(self.cum[i] + self._cell(float(self.grid[i]), t))

    def _clamp(self, t: float) -> float:
        return min(max(t, self.t_min), self.t_max)

    def t_of_s(self, s: float) -> float:
        lo, hi = self.s_range
        if not (lo - 1e-9 <= s <= hi + 1e-9):
            raise ChartDomainError(f"arc length {s} outside parametrized range [{lo}, {hi}]")
        # near machine precision: the residual feeds metric finite
        # differences, which divide by steps of order 1e-6
        tol = 5e-15 * max(1.0, abs(s))
        last = self._last
        if last is not None:
            s_prev, t_prev = last
            if s_prev == s:
                return t_prev
            if abs(s - s_prev) < 0.5:
                t = self._clamp(t_prev + (s - s_prev) / self.speed(t_prev))
                for _ in range(8):
                    f = self.s_of_t(t) - s
                    if abs(f) <= tol:
                        self._last = (s, t)
                        return t
                    t = self._clamp(t - f / self.speed(t))
        i = int(np.clip(np.searchsorted(self.cum, s) - 1, 0, len(self.cum) - 2))
        t_lo, t_hi = float(self.grid[i]), float(self.grid[i + 1])
        t = float(np.interp(s, self.cum[i:i + 2], self.grid[i:i + 2]))
        for _ in range(60):
            f = self.s_of_t(t) - s
            if abs(f) <= tol:
                break
            if f > 0:
                t_hi = t
            else:
                t_lo = t
            t_new = t - f / self.speed(t)
            if not (t_lo <= t_new <= t_hi):
                t_new = 0.5 * (t_lo + t_hi)
            t = t_new
        self._last = (s, t)
        return t


@dataclass
class RevolutionProfile:
    """Profile curve evaluators r(s), h(s) with first derivatives.

    ``natural`` asserts arc-length parametrization, r'^2 + h'^2 = 1.
    ``d2r`` is optional; curvature falls back to differencing ``dr``.
    """

    r: Callable[[float], float]
    dr: Callable[[float], float]
    h: Callable[[float], float]
    dh: Callable[[float], float]
    s_domain: tuple[float, float]
    natural: bool = True
    d2r: Callable[[float], float] | None = None

    @classmethod
    def from_curve(cls, r_of_t: Callable[[float], float], h_of_t: Callable[[float], float],
                   dr_dt: Callable[[float], float], dh_dt: Callable[[float], float],
                   t_domain: tuple[float, float], n_grid: int = 1600,
                   t_anchor: float | None = None) -> "RevolutionProfile":
        """Numerically reparametrize an arbitrary regular profile curve by
        arc length; the returned profile carries the natural flag."""

        def speed(t: float) -> float:
            return math.hypot(dr_dt(t), dh_dt(t))

        param = ArcLengthParam(speed, t_domain[0], t_domain[1],
                               n_grid=n_grid, t_anchor=t_anchor)

        def r(s: float) -> float:
            return r_of_t(param.t_of_s(s))

        def dr(s: float) -> float:
            t = param.t_of_s(s)
            return dr_dt(t) / speed(t)

        def h(s: float) -> float:
            return h_of_t(param.t_of_s(s))

        def dh(s: float) -> float:
            t = param.t_of_s(s)
            return dh_dt(t) / speed(t)

        return cls(r=r, dr=dr, h=h, dh=dh, s_domain=param.s_range, natural=True)

    def natural_residual(self, samples: np.ndarray) -> float:
        """Max |r'^2 + h'^2 - 1| over sample arc lengths."""
        return max(abs(self.dr(s) ** 2 + self.dh(s) ** 2 - 1.0) for s in samples)


@dataclass
class CatalogSurface:
    """A surface of revolution bundled with its chart, flat-connection
    vector field, orthonormal frame, and Mercator anchor."""

    name: str
    profile: RevolutionProfile
    chart: ChartGeometry
    field: VectorFieldSpec
    frame: OrthoFrame
    mercator_anchor: float


def _revolution_chart(name: str, profile: RevolutionProfile,
                      phi_sample: tuple[float, float] = (-math.pi, math.pi)) -> ChartGeometry:
    r = profile.r
    dr = profile.dr
    s0, s1 = profile.s_domain

    def metric(u: float, v: float):
        rr = r(u)
        return (1.0, 0.0, rr * rr)

    def gamma(u: float, v: float):
        rr = r(u)
        rp = dr(u)
        return ((0.0, 0.0, -rr * rp), (0.0, rp / rr, 0.0))

    span = s1 - s0
    return ChartGeometry(
        name=name,
        metric=metric,
        bounds=(s0, s1, -math.inf, math.inf),
        christoffel_analytic=gamma,
        coord_names=("s", "phi"),
        sample_box=(s0 + 0.01 * span, s1 - 0.01 * span, phi_sample[0], phi_sample[1]),
    )


def _surface(name: str, profile: RevolutionProfile, mercator_anchor: float) -> CatalogSurface:
    if not profile.natural:
        raise ValueError(
            "surface construction needs a natural (arc-length) profile; "
            "use RevolutionProfile.from_curve to reparametrize"
        )
    chart = _revolution_chart(name, profile)
    r = profile.r
    dr = profile.dr

    def components(u: float, v: float):
        return (dr(u) / r(u), 0.0)

    def sigma(u: float, v: float) -> float:
        return -math.log(r(u))

    def sigma_grad(u: float, v: float):
        return (-dr(u) / r(u), 0.0)

    fld = VectorFieldSpec(name=f"{name}-flat", components=components,
                          sigma=sigma, sigma_grad=sigma_grad)
    frame = OrthoFrame(e1=lambda u, v: (1.0, 0.0),
                       e2=lambda u, v: (0.0, 1.0 / r(u)))
    return CatalogSurface(name=name, profile=profile, chart=chart,
                          field=fld, frame=frame, mercator_anchor=mercator_anchor)


# ---------------------------------------------------------------------------
# Catalog surfaces
# ---------------------------------------------------------------------------

#: Half-width of the excluded neighbourhoods of the sphere poles.
SPHERE_EPS = 1e-3


def make_sphere(eps: float = SPHERE_EPS) -> CatalogSurface:
    """Unit sphere, colatitude chart s in (eps, pi - eps).

    Profile r = sin s, h = cos s; the pole neighbourhoods are excluded so
    integration stops with a boundary event instead of hitting the chart
    singularity.  Mercator anchor at the equator.
    """
    profile = RevolutionProfile(
        r=math.sin, dr=math.cos, h=math.cos, dh=lambda s: -math.sin(s),
        s_domain=(eps, math.pi - eps), d2r=lambda s: -math.sin(s),
    )
    return _surface("sphere", profile, mercator_anchor=math.pi / 2)


def make_pseudosphere(s_min: float = 1e-3, s_max: float = 6.0) -> CatalogSurface:
    """Pseudosphere (tractrix of r = exp(-s)); constant curvature -1.

    The defining vector field is the constant -e1, which is parallel for
    the flat connection.  Mercator anchor at the domain midpoint.
    """

    def h(s: float) -> float:
        w = math.sqrt(1.0 - math.exp(-2.0 * s))
        return math.atanh(w) - w

    profile = RevolutionProfile(
        r=lambda s: math.exp(-s), dr=lambda s: -math.exp(-s),
        h=h, dh=lambda s: math.sqrt(1.0 - math.exp(-2.0 * s)),
        s_domain=(s_min, s_max), d2r=lambda s: math.exp(-s),
    )
    return _surface("pseudosphere", profile, mercator_anchor=0.5 * (s_min + s_max))


def make_catenoid(s_extent: float = 16.0, n_grid: int = 1600) -> CatalogSurface:
    """Catenoid, numerically reparametrized by arc length from (cosh t, t).

    A minimal surface with non-constant curvature; its Gauss map is
    conformal, so flat-connection geodesics map to sphere loxodromes.
    Mercator anchor at the waist.
    """
    t_ext = math.asinh(s_extent)
    profile = RevolutionProfile.from_curve(
        r_of_t=math.cosh, h_of_t=lambda t: t,
        dr_dt=math.sinh, dh_dt=lambda t: 1.0,
        t_domain=(-t_ext, t_ext), n_grid=n_grid, t_anchor=0.0,
    )
    return _surface("catenoid", profile, mercator_anchor=0.0)


CATALOG_BUILDERS = {
    "sphere": make_sphere,
    "pseudosphere": make_pseudosphere,
    "catenoid": make_catenoid,
}


# ---------------------------------------------------------------------------
# Mercator-type coordinate change
# ---------------------------------------------------------------------------


def mercator_map(surface: CatalogSurface, s) -> float | np.ndarray:
    """y = integral of ds / r from the surface's anchor; x is phi.

    Strictly monotone with dy/ds = 1/r; pushes the surface metric
    diag(1, r^2) to the euclidean metric of the (x, y) plane.
    """
    s0, s1 = surface.profile.s_domain

    def single(val: float) -> float:
        if not (s0 < val < s1):
            raise ChartDomainError(f"s = {val} outside profile domain ({s0}, {s1})")
        y, _ = quad(lambda x: 1.0 / surface.profile.r(x), surface.mercator_anchor, val,
                    epsabs=1e-13, epsrel=1e-13, limit=200)
        return y

    if np.ndim(s) == 0:
        return single(float(s))
    return np.array([single(float(x)) for x in np.asarray(s).ravel()])


def mercator_inverse(surface: CatalogSurface, y: float) -> float:
    """Solve mercator_map(s) = y by bracketed root finding."""
    s0, s1 = surface.profile.s_domain
    lo = s0 + 1e-12 * max(1.0, abs(s0))
    hi = s1 - 1e-12 * max(1.0, abs(s1))
    return float(brentq(lambda s: mercator_map(surface, s) - y, lo, hi, xtol=1e-13))


# ---------------------------------------------------------------------------
# Loxodromes and the Gauss map
# ---------------------------------------------------------------------------


def loxodrome_check(trace: Trace, surface: CatalogSurface,
                    threshold: float = 1e-6) -> InvariantReport:
    """Report on g(velocity, e2) = r * dphi/dt, the cosine of the angle to
    the parallel circles; constant exactly when the curve is a loxodrome."""
    r = surface.profile.r
    vals = np.array([r(u) * dv for u, dv in zip(trace.u, trace.dv)])
    return make_report("loxodrome-angle", trace.t, vals, threshold=threshold, use_std=True)


def gauss_map(surface: CatalogSurface, s: float, phi: float) -> tuple[np.ndarray, tuple[float, float]]:
    """Unit normal at (s, phi) and its (colatitude, longitude) on the sphere.

    Only supported for the catenoid: the map is defined for any surface of
    revolution, but the constant-angle behaviour exploited downstream is
    certified here only for minimal surfaces, where it is conformal.
    """
    if surface.name != "catenoid":
        raise ValueError("gauss_map is only supported for the catenoid surface")
    rp = surface.profile.dr(s)
    hp = surface.profile.dh(s)
    n = np.array([-hp * math.cos(phi), -hp * math.sin(phi), rp])
    colat = math.atan2(math.hypot(n[0], n[1]), n[2])
    lon = math.atan2(n[1], n[0])
    return n, (colat, lon)


def gauss_map_trace(surface: CatalogSurface, trace: Trace) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Map a trace through the Gauss map; returns (normals, colat, lon),
    with the longitude series unwrapped for differencing."""
    normals = np.empty((len(trace), 3))
    colat = np.empty(len(trace))
    lon = np.empty(len(trace))
    for i in range(len(trace)):
        n, (ct, ln) = gauss_map(surface, float(trace.u[i]), float(trace.v[i]))
        normals[i] = n
        colat[i] = ct
        lon[i] = ln
    return normals, colat, np.unwrap(lon)


def sphere_angle_cosines(colat: np.ndarray, lon: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Cosine of the angle to the parallel circles for a sampled sphere
    curve, from finite-differenced velocities; speed-normalized because the
    sampled curve need not be unit speed."""
    ds = series_derivative(t, colat)
    dp = series_derivative(t, lon)
    sin_s = np.sin(colat)
    speed = np.sqrt(ds ** 2 + (sin_s * dp) ** 2)
    return sin_s * dp / speed


def embed_points(surface: CatalogSurface, s: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Embed chart samples into R^3 as (r cos phi, r sin phi, h)."""
    out = np.empty((len(s), 3))
    for i, (ss, pp) in enumerate(zip(s, phi)):
        rr = surface.profile.r(float(ss))
        out[i] = (rr * math.cos(pp), rr * math.sin(pp), surface.profile.h(float(ss)))
    return out


def embed(surface: CatalogSurface, trace: Trace) -> np.ndarray:
    """3D polyline of a trace on the embedded surface."""
    return embed_points(surface, trace.u, trace.v)


def gaussian_curvature(surface: CatalogSurface, s: float) -> float:
    """Gauss curvature -r''/r of a surface of revolution in natural
    parametrization; r'' is differenced from dr when not supplied."""
    profile = surface.profile
    if profile.d2r is not None:
        d2 = profile.d2r(s)
    else:
        h = 1e-5 * max(1.0, abs(s))
        lo, hi = profile.s_domain
        if not (lo < s - h and s + h < hi):
            raise ChartDomainError(f"s = {s} too close to the profile domain edge")
        d2 = (profile.dr(s + h) - profile.dr(s - h)) / (2.0 * h)
    return -d2 / profile.r(s)
