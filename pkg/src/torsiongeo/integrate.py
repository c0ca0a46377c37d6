"""Geodesic ODE assembly and time stepping.

The second-order system integrated here is, in chart coordinates,

    ddot(x)^k = -G^k_ij dx^i dx^j - E^2 V^k + g(V, dx) dx^k

whose solutions have constant speed E by construction.  E is frozen at
launch from the initial velocity rather than re-measured per step, so any
numerical speed drift stays observable in the trace diagnostics; there is
no re-projection.

``integrate`` is a pure function of its inputs; batch runs over many
initial conditions may execute concurrently with no coordination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterator

import numpy as np

from .geometry import ChartGeometry, VectorFieldSpec

STOP_TIME = "t1"
STOP_BOUNDARY = "boundary"
STOP_MAX_STEPS = "max-steps"

#: Absolute time tolerance to which a domain-boundary exit is bisected.
BOUNDARY_TIME_TOL = 1e-9


@dataclass
class GeodesicState:
    """Position and velocity at a time, in chart coordinates."""

    t: float
    u: float
    v: float
    du: float
    dv: float

    @property
    def position(self) -> tuple[float, float]:
        return (self.u, self.v)

    @property
    def velocity(self) -> tuple[float, float]:
        return (self.du, self.dv)


@dataclass
class IntegratorSettings:
    """Stepper configuration.

    ``t1 < t0`` requests backward integration.  For ``rk4`` the step ``h``
    is fixed; for ``rk45`` it is the initial step of the embedded
    Fehlberg pair, controlled by ``rtol``/``atol`` with safety factor 0.9
    and step-scale clamps [0.2, 5.0].
    """

    method: str = "rk4"
    h: float = 1e-3
    rtol: float = 1e-9
    atol: float = 1e-12
    t0: float = 0.0
    t1: float = 1.0
    max_steps: int = 5_000_000

    def __post_init__(self) -> None:
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.h > 0.0:
            raise ValueError("step h must be positive")
        if not (self.rtol > 0.0 and self.atol > 0.0):
            raise ValueError("tolerances must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")


@dataclass
class Trace:
    """A time-ordered geodesic sample with per-step diagnostics.

    Samples are stored with strictly increasing times regardless of the
    integration direction.  ``speed`` is the instantaneous metric norm of
    the velocity, ``kappa`` the geodesic curvature sqrt(|V|^2 - g(V,v)^2/E^2),
    and ``g_v`` the coupling g(V, velocity).
    """

    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    speed: np.ndarray
    kappa: np.ndarray
    g_v: np.ndarray
    E: float
    chart: ChartGeometry | None = None
    field: VectorFieldSpec | None = None
    settings: IntegratorSettings | None = None
    stop_reason: str = STOP_TIME
    scenario_id: str | None = None

    def __len__(self) -> int:
        return len(self.t)

    @property
    def positions(self) -> np.ndarray:
        return np.column_stack([self.u, self.v])

    @property
    def velocities(self) -> np.ndarray:
        return np.column_stack([self.du, self.dv])

    @property
    def is_uniform(self) -> bool:
        if len(self.t) < 3:
            return True
        dt = np.diff(self.t)
        return bool(np.all(np.abs(dt - dt[0]) <= 1e-9 * max(1.0, abs(dt[0]))))

    def state(self, i: int) -> GeodesicState:
        return GeodesicState(float(self.t[i]), float(self.u[i]), float(self.v[i]),
                             float(self.du[i]), float(self.dv[i]))

    def states(self) -> Iterator[GeodesicState]:
        for i in range(len(self.t)):
            yield self.state(i)

    def index_at(self, t: float) -> int:
        return int(np.argmin(np.abs(self.t - t)))

    def sub_interval(self, t_min: float, t_max: float) -> "Trace":
        mask = (self.t >= t_min - 1e-12) & (self.t <= t_max + 1e-12)
        return replace(
            self, t=self.t[mask], u=self.u[mask], v=self.v[mask],
            du=self.du[mask], dv=self.dv[mask], speed=self.speed[mask],
            kappa=self.kappa[mask], g_v=self.g_v[mask],
        )

    def max_speed_drift(self) -> float:
        return float(np.max(np.abs(self.speed - self.E)) / self.E)


class _BoundaryHit(Exception):
    """Internal: a step stage would evaluate outside the open domain box."""


def _make_rhs(chart: ChartGeometry, field: VectorFieldSpec, E2: float) -> Callable:
    metric = chart.metric
    gamma = chart.christoffel_analytic or chart.christoffel_fd
    comp = field.components

    def rhs(u: float, v: float, du: float, dv: float) -> tuple[float, float]:
        (a0, a1, a2), (b0, b1, b2) = gamma(u, v)
        Vu, Vv = comp(u, v)
        g11, g12, g22 = metric(u, v)
        gV = Vu * (g11 * du + g12 * dv) + Vv * (g12 * du + g22 * dv)
        ddu = -(a0 * du * du + 2.0 * a1 * du * dv + a2 * dv * dv) - E2 * Vu + gV * du
        ddv = -(b0 * du * du + 2.0 * b1 * du * dv + b2 * dv * dv) - E2 * Vv + gV * dv
        return ddu, ddv

    return rhs


def geodesic_rhs(chart: ChartGeometry, field: VectorFieldSpec,
                 state: GeodesicState, E: float) -> tuple[float, float]:
    """Acceleration (ddu, ddv) of the torsion-coupled geodesic equation.

    Contracting the result with the velocity shows g(a_levi_civita, v) = 0,
    so the flow conserves the speed E exactly in exact arithmetic.
    """
    chart.require_inside(state.u, state.v)
    rhs = _make_rhs(chart, field, E * E)
    return rhs(state.u, state.v, state.du, state.dv)


def _rk4_step(rhs, contains, u, v, du, dv, h):
    a1, b1 = rhs(u, v, du, dv)
    u2 = u + 0.5 * h * du
    v2 = v + 0.5 * h * dv
    if not contains(u2, v2):
        raise _BoundaryHit
    p2 = du + 0.5 * h * a1
    q2 = dv + 0.5 * h * b1
    a2, b2 = rhs(u2, v2, p2, q2)
    u3 = u + 0.5 * h * p2
    v3 = v + 0.5 * h * q2
    if not contains(u3, v3):
        raise _BoundaryHit
    p3 = du + 0.5 * h * a2
    q3 = dv + 0.5 * h * b2
    a3, b3 = rhs(u3, v3, p3, q3)
    u4 = u + h * p3
    v4 = v + h * q3
    if not contains(u4, v4):
        raise _BoundaryHit
    p4 = du + h * a3
    q4 = dv + h * b3
    a4, b4 = rhs(u4, v4, p4, q4)
    un = u + h * (du + 2.0 * p2 + 2.0 * p3 + p4) / 6.0
    vn = v + h * (dv + 2.0 * q2 + 2.0 * q3 + q4) / 6.0
    if not contains(un, vn):
        raise _BoundaryHit
    pn = du + h * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
    qn = dv + h * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0
    return un, vn, pn, qn


# Fehlberg 4(5) tableau.  The 4th-order solution is propagated; the
# difference to the embedded 5th-order one estimates the local error.
_F_C = (0.25, 3.0 / 8.0, 12.0 / 13.0, 1.0, 0.5)
_F_A = (
    (0.25,),
    (3.0 / 32.0, 9.0 / 32.0),
    (1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0),
    (439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0),
    (-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0),
)
_F_B4 = (25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0)
_F_B5 = (16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0)
_F_ERR = tuple(b5 - b4 for b4, b5 in zip(_F_B4, _F_B5))


def _rkf45_step(rhs, contains, y, h):
    """One Fehlberg step from the 4-vector y; returns (y4, err_vector)."""
    ks = []
    f = rhs(y[0], y[1], y[2], y[3])
    ks.append((y[2], y[3], f[0], f[1]))
    for row in _F_A:
        z = [y[i] + h * sum(a * k[i] for a, k in zip(row, ks)) for i in range(4)]
        if not contains(z[0], z[1]):
            raise _BoundaryHit
        f = rhs(z[0], z[1], z[2], z[3])
        ks.append((z[2], z[3], f[0], f[1]))
    y4 = [y[i] + h * sum(b * k[i] for b, k in zip(_F_B4, ks)) for i in range(4)]
    if not contains(y4[0], y4[1]):
        raise _BoundaryHit
    err = [h * sum(e * k[i] for e, k in zip(_F_ERR, ks)) for i in range(4)]
    return y4, err


def integrate(chart: ChartGeometry, field: VectorFieldSpec,
              initial: GeodesicState, settings: IntegratorSettings,
              scenario_id: str | None = None) -> Trace:
    """Integrate the geodesic equation from ``initial`` over the settings span.

    The initial position must lie strictly inside the chart domain and the
    initial velocity must be nonzero; E is the metric speed at launch.
    Integration stops at ``t1``, at ``max_steps``, or at a domain-boundary
    event, whichever comes first, and records which in ``stop_reason``.
    A step that would evaluate outside the open domain box triggers the
    boundary stop: the offending step is discarded and the exit time is
    refined by bisection to ``BOUNDARY_TIME_TOL``.
    """
    chart.require_inside(initial.u, initial.v)
    g11, g12, g22 = chart.metric(initial.u, initial.v)
    du, dv = initial.du, initial.dv
    E2 = g11 * du * du + 2.0 * g12 * du * dv + g22 * dv * dv
    if not E2 > 0.0:
        raise ValueError("initial velocity must be nonzero")
    E = math.sqrt(E2)

    rhs = _make_rhs(chart, field, E2)
    contains = chart.contains
    metric = chart.metric
    comp = field.components

    ts = [settings.t0]
    us = [initial.u]
    vs = [initial.v]
    dus = [du]
    dvs = [dv]

    direction = 1.0 if settings.t1 >= settings.t0 else -1.0
    span = abs(settings.t1 - settings.t0)
    # Times come from k * h, not from accumulation, so the stored grid is
    # exactly uniform apart from an optional short final step.
    n_full = int(math.floor(span / settings.h + 1e-9))
    rem = span - n_full * settings.h
    if rem <= 1e-9 * settings.h:
        rem = 0.0
    total = n_full + (1 if rem > 0.0 else 0)
    u, v = initial.u, initial.v
    stop = STOP_TIME
    k = 0

    while k < total:
        if k >= settings.max_steps:
            stop = STOP_MAX_STEPS
            break
        h_mag = settings.h if k < n_full else rem
        h = direction * h_mag
        try:
            u, v, du, dv = _rk4_step(rhs, contains, u, v, du, dv, h)
        except _BoundaryHit:
            partial = _bisect_exit(rhs, contains, u, v, du, dv, h)
            if partial is not None:
                h_part, (u, v, du, dv) = partial
                ts.append(ts[-1] + h_part)
                us.append(u)
                vs.append(v)
                dus.append(du)
                dvs.append(dv)
            stop = STOP_BOUNDARY
            break
        k += 1
        t_rel = k * settings.h if k <= n_full else span
        ts.append(settings.t0 + direction * min(t_rel, span))
        us.append(u)
        vs.append(v)
        dus.append(du)
        dvs.append(dv)

    t = np.array(ts)
    ua = np.array(us)
    va = np.array(vs)
    dua = np.array(dus)
    dva = np.array(dvs)
    if direction < 0:
        t, ua, va, dua, dva = t[::-1], ua[::-1], va[::-1], dua[::-1], dva[::-1]

    speed, kappa, g_v = _diagnostics(metric, comp, ua, va, dua, dva, E)
    return Trace(t=t, u=ua, v=va, du=dua, dv=dva, speed=speed, kappa=kappa,
                 g_v=g_v, E=E, chart=chart, field=field, settings=settings,
                 stop_reason=stop, scenario_id=scenario_id)


def _bisect_exit(rhs, contains, u, v, du, dv, h):
    """Largest sub-step of h that stays inside, refined to BOUNDARY_TIME_TOL.

    Returns (h_taken, state) or None when even a vanishing step exits.
    """
    lo = 0.0
    hi = abs(h)
    sign = 1.0 if h >= 0 else -1.0
    best = None
    while hi - lo > BOUNDARY_TIME_TOL:
        mid = 0.5 * (lo + hi)
        try:
            state = _rk4_step(rhs, contains, u, v, du, dv, sign * mid)
        except _BoundaryHit:
            hi = mid
        else:
            lo = mid
            best = state
    if best is None or lo == 0.0:
        return None
    return sign * lo, best


def _diagnostics(metric, comp, u, v, du, dv, E):
    n = len(u)
    speed = np.empty(n)
    kappa = np.empty(n)
    g_v = np.empty(n)
    E2 = E * E
    for i in range(n):
        g11, g12, g22 = metric(u[i], v[i])
        Vu, Vv = comp(u[i], v[i])
        sp2 = g11 * du[i] ** 2 + 2.0 * g12 * du[i] * dv[i] + g22 * dv[i] ** 2
        speed[i] = math.sqrt(max(0.0, sp2))
        gv = Vu * (g11 * du[i] + g12 * dv[i]) + Vv * (g12 * du[i] + g22 * dv[i])
        nv2 = g11 * Vu * Vu + 2.0 * g12 * Vu * Vv + g22 * Vv * Vv
        g_v[i] = gv
        kappa[i] = math.sqrt(max(0.0, nv2 - gv * gv / E2))
    return speed, kappa, g_v


def integrate_adaptive(chart: ChartGeometry, field: VectorFieldSpec,
                       initial: GeodesicState, settings: IntegratorSettings,
                       scenario_id: str | None = None) -> Trace:
    """Embedded Fehlberg 4(5) integration with per-step error control."""
    chart.require_inside(initial.u, initial.v)
    g11, g12, g22 = chart.metric(initial.u, initial.v)
    du, dv = initial.du, initial.dv
    E2 = g11 * du * du + 2.0 * g12 * du * dv + g22 * dv * dv
    if not E2 > 0.0:
        raise ValueError("initial velocity must be nonzero")
    E = math.sqrt(E2)

    rhs = _make_rhs(chart, field, E2)
    contains = chart.contains

    direction = 1.0 if settings.t1 >= settings.t0 else -1.0
    span = abs(settings.t1 - settings.t0)
    t_rel = 0.0
    y = [initial.u, initial.v, du, dv]
    rows = [(settings.t0, *y)]
    h_mag = min(settings.h, span) if span > 0 else settings.h
    stop = STOP_TIME
    steps = 0
    tiny = 1e-15 * max(1.0, span)

    while span - t_rel > tiny:
        if steps >= settings.max_steps:
            stop = STOP_MAX_STEPS
            break
        if h_mag < 1e-14:
            raise RuntimeError("adaptive step size underflow")
        h_mag = min(h_mag, span - t_rel)
        h = direction * h_mag
        try:
            y_new, err = _rkf45_step(rhs, contains, y, h)
        except _BoundaryHit:
            partial = _bisect_exit(rhs, contains, y[0], y[1], y[2], y[3], h)
            if partial is not None:
                h_part, state = partial
                t_rel += abs(h_part)
                rows.append((settings.t0 + direction * t_rel, *state))
            stop = STOP_BOUNDARY
            break
        steps += 1
        ratio = 0.0
        for e, a, b in zip(err, y, y_new):
            scale = settings.atol + settings.rtol * max(abs(a), abs(b))
            ratio = max(ratio, abs(e) / scale)
        if ratio <= 1.0:
            t_rel += h_mag
            y = y_new
            rows.append((settings.t0 + direction * t_rel, *y))
        factor = 5.0 if ratio == 0.0 else min(5.0, max(0.2, 0.9 * ratio ** -0.2))
        h_mag *= factor

    arr = np.array(rows)
    if direction < 0:
        arr = arr[::-1]
    t, ua, va, dua, dva = arr.T
    speed, kappa, g_v = _diagnostics(chart.metric, field.components, ua, va, dua, dva, E)
    return Trace(t=t, u=ua, v=va, du=dua, dv=dva, speed=speed, kappa=kappa,
                 g_v=g_v, E=E, chart=chart, field=field, settings=settings,
                 stop_reason=stop, scenario_id=scenario_id)


def integrate_any(chart: ChartGeometry, field: VectorFieldSpec,
                  initial: GeodesicState, settings: IntegratorSettings,
                  scenario_id: str | None = None) -> Trace:
    """Dispatch on ``settings.method``."""
    if settings.method == "rk45":
        return integrate_adaptive(chart, field, initial, settings, scenario_id)
    return integrate(chart, field, initial, settings, scenario_id)


def levi_civita_integrate(chart: ChartGeometry, initial: GeodesicState,
                          settings: IntegratorSettings,
                          scenario_id: str | None = None) -> Trace:
    """Classical geodesic flow: the V = 0 special case."""
    return integrate_any(chart, VectorFieldSpec.zero(), initial, settings, scenario_id)


def merge_traces(backward: Trace, forward: Trace) -> Trace:
    """Join a backward and a forward run launched from the same state.

    Both traces are ascending in time; the duplicated launch sample is
    dropped from the forward part.
    """
    if abs(backward.t[-1] - forward.t[0]) > 1e-12:
        raise ValueError("traces do not share the launch time")

    def cat(a, b):
        return np.concatenate([a, b[1:]])

    return Trace(
        t=cat(backward.t, forward.t), u=cat(backward.u, forward.u),
        v=cat(backward.v, forward.v), du=cat(backward.du, forward.du),
        dv=cat(backward.dv, forward.dv), speed=cat(backward.speed, forward.speed),
        kappa=cat(backward.kappa, forward.kappa), g_v=cat(backward.g_v, forward.g_v),
        E=forward.E, chart=forward.chart, field=forward.field,
        settings=forward.settings,
        stop_reason=f"{backward.stop_reason}/{forward.stop_reason}",
        scenario_id=forward.scenario_id,
    )


def integrate_two_sided(chart: ChartGeometry, field: VectorFieldSpec,
                        initial: GeodesicState, t_min: float, t_max: float,
                        h: float = 1e-3, method: str = "rk4",
                        scenario_id: str | None = None,
                        rtol: float = 1e-9, atol: float = 1e-12) -> Trace:
    """Integrate over [t_min, t_max] with the launch state at t = 0."""
    if not (t_min <= 0.0 <= t_max):
        raise ValueError("two-sided span must contain t = 0")
    fwd = integrate_any(chart, field, initial,
                        IntegratorSettings(method=method, h=h, t0=0.0, t1=t_max,
                                           rtol=rtol, atol=atol), scenario_id)
    if t_min == 0.0:
        return fwd
    back = integrate_any(chart, field, initial,
                         IntegratorSettings(method=method, h=h, t0=0.0, t1=t_min,
                                            rtol=rtol, atol=atol), scenario_id)
    return merge_traces(back, fwd)
