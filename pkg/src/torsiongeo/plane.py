"""Vector fields on the euclidean plane and their geodesic phenomenology.

For V = f dx + g dy the geodesics obey x'' = -kappa y', y'' = kappa x' with
signed curvature kappa = f y' - g x'.  When the connection is flat, i.e.
(f, g) = (d_y p, -d_x p) for a potential p, the complex velocity satisfies
z' = z0 exp(i p), giving a second invariant of motion beside the speed.
The shear field y dx admits the explicit invariant +/- y^2/2 - arcsin(y')
whose singular levels confine generic geodesics to horizontal strips.

Pure computations throughout; the shooting sweep is vectorized over
launch angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .audit import InvariantReport, SegmentStat, make_report
from .geometry import VectorFieldSpec, fd_step
from .integrate import GeodesicState, Trace

#: A branch segment of the arcsin invariant ends when |x'| drops below this.
BRANCH_SPLIT_TOL = 1e-9


@dataclass
class PlaneField:
    """A plane vector field f dx + g dy with an optional flat potential.

    ``potential`` declares f = d_y p and g = -d_x p, which makes the
    induced connection flat (vanishing curvature density).
    """

    name: str
    f: Callable[[float, float], float]
    g: Callable[[float, float], float]
    potential: Callable[[float, float], float] | None = None
    killing: bool = False

    def components(self, x: float, y: float) -> tuple[float, float]:
        return (self.f(x, y), self.g(x, y))

    def as_spec(self) -> VectorFieldSpec:
        return VectorFieldSpec(name=self.name, components=self.components,
                               flat_potential=self.potential, killing=self.killing)

    def connection_form(self, x: float, y: float) -> tuple[float, float]:
        """Coefficients (w_dx, w_dy) of the connection form g dx - f dy."""
        return (self.g(x, y), -self.f(x, y))

    def curvature_density(self, x: float, y: float) -> float:
        """-(d_x f + d_y g), the coefficient of the curvature form."""
        hx = fd_step(x)
        hy = fd_step(y)
        dfx = (self.f(x + hx, y) - self.f(x - hx, y)) / (2.0 * hx)
        dgy = (self.g(x, y + hy) - self.g(x, y - hy)) / (2.0 * hy)
        return -(dfx + dgy)


def winding_field() -> PlaneField:
    """V = -y dx + x dy, the rotation generator; flat potential -(x^2+y^2)/2."""
    return PlaneField(
        name="winding",
        f=lambda x, y: -y,
        g=lambda x, y: x,
        potential=lambda x, y: -0.5 * (x * x + y * y),
        killing=True,
    )


def shear_field() -> PlaneField:
    """V = y dx; flat potential y^2/2.  Not Killing, but commutes with dx."""
    return PlaneField(
        name="shear",
        f=lambda x, y: y,
        g=lambda x, y: 0.0 * x,
        potential=lambda x, y: 0.5 * y * y,
        killing=False,
    )


def constant_field(a: float, b: float) -> PlaneField:
    """A constant field a dx + b dy; flat potential a y - b x, Killing."""
    return PlaneField(
        name=f"constant({a:.6g},{b:.6g})",
        f=lambda x, y: a,
        g=lambda x, y: b,
        potential=lambda x, y: a * y - b * x,
        killing=True,
    )


def plane_curvature(field, state) -> float:
    """Signed curvature f y' - g x' of a unit-speed plane geodesic."""
    if isinstance(state, GeodesicState):
        x, y, dx, dy = state.u, state.v, state.du, state.dv
    else:
        x, y, dx, dy = state
    if hasattr(field, "f"):
        return field.f(x, y) * dy - field.g(x, y) * dx
    fx, fy = field.components(x, y)
    return fx * dy - fy * dx


# ---------------------------------------------------------------------------
# Flat-case complex invariant
# ---------------------------------------------------------------------------


def flat_invariant(trace: Trace, p: Callable[[float, float], float] | None = None,
                   threshold: float = 1e-6) -> InvariantReport:
    """Report on z' exp(-i p) along a flat-connection plane geodesic.

    The series is constant (equal to its launch value z0, with |z0| = E)
    whenever the trace comes from a field with flat potential p.
    """
    if p is None:
        p = getattr(trace.field, "flat_potential", None)
    if p is None:
        raise ValueError("no flat potential available for the complex invariant")
    zdot = trace.du + 1j * trace.dv
    phase = np.array([p(x, y) for x, y in zip(trace.u, trace.v)])
    values = zdot * np.exp(-1j * phase)
    return make_report("flat-invariant", trace.t, values, threshold=threshold)


# ---------------------------------------------------------------------------
# Shear field: arcsin invariant, strips, quadrature
# ---------------------------------------------------------------------------


def _require_unit_speed(E: float) -> None:
    if abs(E - 1.0) > 1e-9:
        raise ValueError(f"natural parametrization required (E = 1), got E = {E}")


def arcsin_invariant(trace: Trace, threshold: float = 1e-6,
                     clamp_tol: float = 1e-9) -> InvariantReport:
    """Piecewise invariant c = sign(x') * y^2/2 - arcsin(y') of the shear field.

    The sign tracks the branch of x' = +/- sqrt(1 - y'^2); a branch segment
    ends where |x'| < BRANCH_SPLIT_TOL or the sign flips, and constancy is
    asserted per segment.  |y'| beyond 1 (impossible at E = 1 up to
    roundoff) raises ValueError.
    """
    _require_unit_speed(trace.E)
    dy = trace.dv
    if np.any(np.abs(dy) > 1.0 + clamp_tol):
        raise ValueError("|y'| exceeds 1; trace is not in natural parametrization")
    dyc = np.clip(dy, -1.0, 1.0)
    dx = trace.du

    values = np.full(len(trace), np.nan)
    live = np.abs(dx) >= BRANCH_SPLIT_TOL
    signs = np.sign(dx)
    values[live] = signs[live] * 0.5 * trace.v[live] ** 2 - np.arcsin(dyc[live])

    segments: list[SegmentStat] = []
    start = None
    for i in range(len(trace) + 1):
        boundary = i == len(trace) or not live[i] or (start is not None and signs[i] != signs[start])
        if start is None:
            if i < len(trace) and live[i]:
                start = i
            continue
        if boundary:
            seg = values[start:i]
            segments.append(SegmentStat(
                start=start, stop=i, sign=int(signs[start]),
                mean=float(np.mean(seg)), std=float(np.std(seg)),
                max_dev=float(np.max(np.abs(seg - seg[0]))),
            ))
            start = i if (i < len(trace) and live[i]) else None

    max_dev = max((s.max_dev for s in segments), default=math.nan)
    worst_std = max((s.std for s in segments), default=math.nan)
    return InvariantReport(
        name="arcsin-invariant", times=trace.t, values=values,
        max_dev=max_dev, std=worst_std, threshold=threshold,
        passed=bool(segments) and worst_std < threshold, segments=segments,
    )


@dataclass
class StripBounds:
    """Singular levels of the shear quadrature bracketing a launch height.

    ``sign`` is the x' branch at launch.  The bounds satisfy
    sin(sign * y^2/2 - c) = 0; a generic geodesic approaches them
    asymptotically and never leaves the open strip.
    """

    c: float
    sign: int
    lower: float
    upper: float

    @property
    def degenerate(self) -> bool:
        return self.lower == self.upper


def strip_bounds(y0: float, dy0: float, dx0: float) -> StripBounds:
    """Strip of the shear-field geodesic launched at height y0 with
    velocity (dx0, dy0), |velocity| = 1.

    A horizontal launch (dy0 = 0) makes y0 itself a singular level and the
    strip degenerates to the line y = y0.
    """
    _require_unit_speed(math.hypot(dx0, dy0))
    if dx0 != 0.0:
        s = 1 if dx0 > 0 else -1
    else:
        # branch chosen by the sign x' acquires immediately after launch
        s = 1 if -y0 * dy0 * dy0 >= 0 else -1
    c = s * 0.5 * y0 * y0 - math.asin(max(-1.0, min(1.0, dy0)))
    if dy0 == 0.0:
        return StripBounds(c=c, sign=s, lower=y0, upper=y0)

    levels: list[float] = []
    k0 = math.ceil(-c / math.pi) if s > 0 else math.floor(-c / math.pi)
    reach = abs(y0) + 1.0
    for j in range(256):
        k = k0 + s * j
        val = 2.0 * s * (c + k * math.pi)
        if val < 0.0:
            continue
        m = math.sqrt(val)
        levels.extend([m, -m] if m > 0.0 else [0.0])
        if m > reach:
            break
    lower = max((lv for lv in levels if lv < y0), default=-math.inf)
    upper = min((lv for lv in levels if lv > y0), default=math.inf)
    return StripBounds(c=c, sign=s, lower=lower, upper=upper)


@dataclass
class StripTime:
    """Elapsed time from the strip quadrature, with a divergence flag."""

    t: float
    diverged: bool


def strip_quadrature(y0: float, y: float, c: float, sign: int,
                     cap: float = 1e4) -> StripTime:
    """Elapsed time t = integral from y0 to y of dy / sin(sign y^2/2 - c).

    The interval must be free of singular levels of the integrand; a level
    strictly inside raises ValueError.  The integral diverges
    logarithmically at the levels, so a target within floating-point reach
    of one reports the capped value with the divergence flag set.
    """

    def theta(x: float) -> float:
        return sign * 0.5 * x * x - c

    if y == y0:
        return StripTime(0.0, False)

    bounds = strip_bounds_from_invariant(y0, c, sign)
    lo, hi = (y0, y) if y > y0 else (y, y0)
    near = min(abs(y - bounds.lower), abs(y - bounds.upper))
    if not (bounds.lower < lo and hi < bounds.upper):
        if near <= 4.0 * np.finfo(float).eps * max(1.0, abs(y)):
            return StripTime(math.copysign(cap, y - y0), True)
        raise ValueError(
            f"singular level inside the quadrature interval [{lo}, {hi}]"
        )

    def integrand(x: float) -> float:
        return 1.0 / math.sin(theta(x))

    # Approach a nearby singular endpoint geometrically so the adaptive
    # rule never straddles the blow-up.
    target_level = bounds.upper if y > y0 else bounds.lower
    gap = abs(target_level - y)
    width = abs(y - y0)
    total = 0.0
    if gap < 0.25 * width:
        pieces = [y0]
        g = 0.5 * width
        while g > gap * 1.0001:
            pieces.append(target_level - math.copysign(g, target_level - y0))
            g *= 0.5
        pieces.append(y)
        for a, b in zip(pieces[:-1], pieces[1:]):
            part, _ = quad(integrand, a, b, epsabs=1e-13, epsrel=1e-10, limit=300)
            total += part
            if abs(total) >= cap:
                return StripTime(math.copysign(cap, total), True)
    else:
        total, _ = quad(integrand, y0, y, epsabs=1e-13, epsrel=1e-10, limit=300)
    if abs(total) >= cap:
        return StripTime(math.copysign(cap, total), True)
    return StripTime(total, False)


def strip_bounds_from_invariant(y0: float, c: float, sign: int) -> StripBounds:
    """Strip bounds from an already-known invariant value."""
    dy0 = math.sin(sign * 0.5 * y0 * y0 - c)
    dx0 = float(sign) * math.sqrt(max(0.0, 1.0 - dy0 * dy0))
    if dy0 == 0.0:
        # y0 sits on a singular level; treat as degenerate
        return StripBounds(c=c, sign=sign, lower=y0, upper=y0)
    return strip_bounds(y0, dy0, dx0)


# ---------------------------------------------------------------------------
# Shooting sweep (vectorized over launch angles)
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    angles: np.ndarray
    y_min: np.ndarray
    y_max: np.ndarray


def shooting_sweep(origin: tuple[float, float] = (1.0, 1.0), n_angles: int = 720,
                   t_max: float = 50.0, h: float = 2e-3,
                   field: PlaneField | None = None,
                   both_directions: bool = True) -> SweepResult:
    """Integrate unit-speed launches in every direction and record the
    extreme heights reached; the negative-control evidence that points in
    disjoint strips cannot be joined by a geodesic arc.

    Batched RK4 over all angles at once; E = 1 per trajectory.
    """
    field = field or shear_field()
    angles = 2.0 * math.pi * np.arange(n_angles) / n_angles

    def rhs(x, y, dx, dy):
        f = field.f(x, y) + 0.0 * x
        g = field.g(x, y) + 0.0 * x
        gv = f * dx + g * dy
        return dx, dy, -f + gv * dx, -g + gv * dy

    def run(h_signed: float, steps: int, y_lo, y_hi):
        x = np.full(n_angles, float(origin[0]))
        y = np.full(n_angles, float(origin[1]))
        dx = np.cos(angles)
        dy = np.sin(angles)
        for _ in range(steps):
            k1 = rhs(x, y, dx, dy)
            k2 = rhs(x + 0.5 * h_signed * k1[0], y + 0.5 * h_signed * k1[1],
                     dx + 0.5 * h_signed * k1[2], dy + 0.5 * h_signed * k1[3])
            k3 = rhs(x + 0.5 * h_signed * k2[0], y + 0.5 * h_signed * k2[1],
                     dx + 0.5 * h_signed * k2[2], dy + 0.5 * h_signed * k2[3])
            k4 = rhs(x + h_signed * k3[0], y + h_signed * k3[1],
                     dx + h_signed * k3[2], dy + h_signed * k3[3])
            x = x + h_signed * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6.0
            y = y + h_signed * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6.0
            dx = dx + h_signed * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]) / 6.0
            dy = dy + h_signed * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]) / 6.0
            np.minimum(y_lo, y, out=y_lo)
            np.maximum(y_hi, y, out=y_hi)
        return y_lo, y_hi

    steps = int(round(t_max / h))
    y_lo = np.full(n_angles, float(origin[1]))
    y_hi = np.full(n_angles, float(origin[1]))
    run(h, steps, y_lo, y_hi)
    if both_directions:
        run(-h, steps, y_lo, y_hi)
    return SweepResult(angles=angles, y_min=y_lo, y_max=y_hi)
