"""Diagnostics along integrated traces: curvature, constants of motion,
flow symmetry.

Time derivatives of sampled series use 4th-order central differences on
uniform grids and a cubic spline on non-uniform (adaptive) grids, matching
the integrator order.  All functions are pure post-processing over
immutable traces and are embarrassingly parallel across reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .geometry import ChartGeometry, VectorFieldSpec, inner
from .integrate import GeodesicState, IntegratorSettings, Trace, integrate_any, merge_traces

#: Per-step slack when asserting that a series is non-increasing; absorbs
#: roundoff without masking genuine violations.
MONOTONE_TOL = 1e-8


@dataclass
class SegmentStat:
    """Statistics of one branch segment of a piecewise invariant."""

    start: int
    stop: int  # exclusive
    sign: int
    mean: float
    std: float
    max_dev: float


@dataclass
class InvariantReport:
    """Drift statistics of a sampled quantity along a trace."""

    name: str
    times: np.ndarray
    values: np.ndarray
    max_dev: float
    std: float
    monotone: bool | None = None
    threshold: float | None = None
    passed: bool | None = None
    segments: list[SegmentStat] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        if self.passed is None:
            return "N/A"
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "max_dev": self.max_dev,
            "std": self.std,
            "verdict": self.verdict,
        }
        if self.monotone is not None:
            out["monotone"] = self.monotone
        if self.threshold is not None:
            out["threshold"] = self.threshold
        if self.segments:
            out["segments"] = [
                {"start": s.start, "stop": s.stop, "sign": s.sign,
                 "mean": s.mean, "std": s.std, "max_dev": s.max_dev}
                for s in self.segments
            ]
        return out


def make_report(name: str, times: np.ndarray, values: np.ndarray,
                threshold: float | None = None, use_std: bool = False,
                monotone: bool | None = None) -> InvariantReport:
    """Report drift of ``values`` against its initial sample."""
    finite = values[np.isfinite(values.real if np.iscomplexobj(values) else values)]
    ref = finite[0]
    max_dev = float(np.max(np.abs(finite - ref))) if len(finite) else math.nan
    centered = finite - np.mean(finite)
    std = float(np.sqrt(np.mean(np.abs(centered) ** 2))) if len(finite) else math.nan
    passed = None
    if threshold is not None:
        passed = (std if use_std else max_dev) < threshold
    return InvariantReport(name=name, times=times, values=values,
                           max_dev=max_dev, std=std, monotone=monotone,
                           threshold=threshold, passed=passed)


# ---------------------------------------------------------------------------
# Series derivatives
# ---------------------------------------------------------------------------


def series_derivative(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """d y / d t of a sampled series, 4th order on uniform grids."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) < 5:
        return CubicSpline(t, y).derivative()(t)
    dt = np.diff(t)
    h = np.median(dt)
    if np.all(np.abs(dt - h) <= 1e-9 * max(1.0, h)):
        out = np.empty_like(y)
        out[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
        # one-sided 4th order at the edges
        c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
        d = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / (12.0 * h)
        out[0] = c @ y[:5]
        out[1] = d @ y[:5]
        out[-1] = -(c @ y[-5:][::-1])
        out[-2] = -(d @ y[-5:][::-1])
        return out
    # Non-uniform grid: prune near-duplicate knots (boundary bisection tails)
    # before fitting a spline.
    keep = np.concatenate([[True], dt > 1e-6 * h])
    spline = CubicSpline(t[keep], y[keep])
    return spline.derivative()(t)


def interior_slice(n: int, margin: int = 2) -> slice:
    return slice(margin, max(margin + 1, n - margin))


# ---------------------------------------------------------------------------
# Curvature
# ---------------------------------------------------------------------------


def curvature_general(trace: Trace, field: VectorFieldSpec | None = None) -> np.ndarray:
    """Per-sample geodesic curvature sqrt(max(0, |V|^2 - g(V, v)^2 / E^2)).

    Nonnegative; vanishes where the velocity is parallel to V, where the
    curve locally coincides with a classical geodesic.
    """
    field = _resolve_field(trace, field)
    chart = _require_chart(trace)
    E2 = trace.E * trace.E
    out = np.empty(len(trace))
    for i in range(len(trace)):
        g11, g12, g22 = chart.metric(trace.u[i], trace.v[i])
        Vu, Vv = field.components(trace.u[i], trace.v[i])
        nv2 = g11 * Vu * Vu + 2.0 * g12 * Vu * Vv + g22 * Vv * Vv
        gv = Vu * (g11 * trace.du[i] + g12 * trace.dv[i]) + Vv * (g12 * trace.du[i] + g22 * trace.dv[i])
        out[i] = math.sqrt(max(0.0, nv2 - gv * gv / E2))
    return out


def kinematic_curvature(trace: Trace) -> np.ndarray:
    """Curvature |a + Gamma(v, v)| / E^2 with the acceleration differenced
    from the stored velocities; the independent oracle for the closed form."""
    chart = _require_chart(trace)
    ddu = series_derivative(trace.t, trace.du)
    ddv = series_derivative(trace.t, trace.dv)
    E2 = trace.E * trace.E
    out = np.empty(len(trace))
    for i in range(len(trace)):
        (a0, a1, a2), (b0, b1, b2) = chart.christoffel_raw(trace.u[i], trace.v[i])
        du, dv = trace.du[i], trace.dv[i]
        wu = ddu[i] + a0 * du * du + 2.0 * a1 * du * dv + a2 * dv * dv
        wv = ddv[i] + b0 * du * du + 2.0 * b1 * du * dv + b2 * dv * dv
        g11, g12, g22 = chart.metric(trace.u[i], trace.v[i])
        n2 = g11 * wu * wu + 2.0 * g12 * wu * wv + g22 * wv * wv
        out[i] = math.sqrt(max(0.0, n2)) / E2
    return out


def killing_curvature_check(trace: Trace, field: VectorFieldSpec | None = None,
                            residual_tol: float = 1e-4) -> InvariantReport:
    """For a Killing field: d/dt g(V, v) = -E^2 kappa^2, g(V, v) non-increasing.

    The derivative is finite-differenced from the stored g(V, v) series.
    Raises ValueError for a field not flagged Killing.
    """
    field = _resolve_field(trace, field)
    if not field.killing:
        raise ValueError(f"field {field.name!r} is not flagged as a Killing field")
    gv = trace.g_v
    kappa = curvature_general(trace, field)
    dgv = series_derivative(trace.t, gv)
    residual = dgv + trace.E ** 2 * kappa ** 2
    core = interior_slice(len(trace))
    max_res = float(np.max(np.abs(residual[core])))
    monotone = bool(np.all(np.diff(gv) <= MONOTONE_TOL))
    return InvariantReport(
        name="killing-curvature", times=trace.t, values=residual,
        max_dev=max_res, std=float(np.std(residual[core])),
        monotone=monotone, threshold=residual_tol,
        passed=(max_res < residual_tol) and monotone,
    )


# ---------------------------------------------------------------------------
# Constants of motion from conformal Killing data
# ---------------------------------------------------------------------------


def conformal_constant(trace: Trace, sigma: Callable[[float, float], float] | None = None,
                       X: Callable[[float, float], tuple[float, float]] | Sequence[float] = (0.0, 1.0),
                       threshold: float = 1e-6) -> InvariantReport:
    """Report on exp(sigma) * g(velocity, X) along the trace.

    ``X`` is a Killing field of the conformally rescaled metric, given in
    chart components (callable or constant pair).  With ``sigma`` omitted,
    the potential attached to the trace's vector field is used.
    """
    chart = _require_chart(trace)
    if sigma is None:
        sigma = getattr(trace.field, "sigma", None)
    if sigma is None:
        raise ValueError("no scalar potential available for the conformal constant")
    xfun = X if callable(X) else (lambda u, v: (X[0], X[1]))
    vals = np.empty(len(trace))
    for i in range(len(trace)):
        p = (trace.u[i], trace.v[i])
        vals[i] = math.exp(sigma(*p)) * inner(chart, p, (trace.du[i], trace.dv[i]), xfun(*p))
    return make_report("conformal-constant", trace.t, vals, threshold=threshold, use_std=True)


def naive_momentum(trace: Trace,
                   X: Callable[[float, float], tuple[float, float]] | Sequence[float] = (0.0, 1.0)) -> np.ndarray:
    """The uncorrected series g(velocity, X); generally not a first integral."""
    chart = _require_chart(trace)
    xfun = X if callable(X) else (lambda u, v: (X[0], X[1]))
    return np.array([
        inner(chart, (trace.u[i], trace.v[i]), (trace.du[i], trace.dv[i]),
              xfun(trace.u[i], trace.v[i]))
        for i in range(len(trace))
    ])


# ---------------------------------------------------------------------------
# Flow symmetry
# ---------------------------------------------------------------------------


@dataclass
class Isometry:
    """A chart isometry given by a point map and its differential."""

    name: str
    point_map: Callable[[float, float], tuple[float, float]]
    differential: Callable[[float, float], np.ndarray]

    @classmethod
    def identity(cls) -> "Isometry":
        return cls("identity", lambda u, v: (u, v), lambda u, v: np.eye(2))

    @classmethod
    def rotation(cls, angle: float, center: tuple[float, float] = (0.0, 0.0)) -> "Isometry":
        c, s = math.cos(angle), math.sin(angle)
        R = np.array([[c, -s], [s, c]])
        cx, cy = center

        def pmap(u: float, v: float) -> tuple[float, float]:
            x, y = u - cx, v - cy
            return (cx + c * x - s * y, cy + s * x + c * y)

        return cls(f"rotation({angle:.6g})", pmap, lambda u, v: R)

    @classmethod
    def translation(cls, dx: float, dy: float) -> "Isometry":
        return cls(f"translation({dx:.6g},{dy:.6g})",
                   lambda u, v: (u + dx, v + dy), lambda u, v: np.eye(2))


def killing_flow_symmetry(trace: Trace, isometry: Isometry,
                          commute_tol: float = 1e-6) -> float:
    """Max pointwise mismatch between the mapped trace and a re-integration.

    The map is applied to the launch state, the geodesic is re-integrated
    with the trace's own settings, and positions are compared sample by
    sample.  The isometry must commute with the trace's vector field; this
    is spot-checked at 20 sample points and violations raise ValueError.
    """
    chart = _require_chart(trace)
    field = _resolve_field(trace, None)
    _check_commutes(trace, isometry, field, commute_tol)

    i0 = trace.index_at(0.0)
    u0, v0 = isometry.point_map(trace.u[i0], trace.v[i0])
    D = isometry.differential(trace.u[i0], trace.v[i0])
    w = D @ np.array([trace.du[i0], trace.dv[i0]])
    state = GeodesicState(0.0, u0, v0, float(w[0]), float(w[1]))

    settings = trace.settings or IntegratorSettings()
    t_min, t_max = float(trace.t[0]), float(trace.t[-1])
    fwd = integrate_any(chart, field, state,
                        _with_span(settings, 0.0, t_max))
    if t_min < 0.0:
        back = integrate_any(chart, field, state,
                             _with_span(settings, 0.0, t_min))
        reint = merge_traces(back, fwd)
    else:
        reint = fwd
    if len(reint) != len(trace) or np.max(np.abs(reint.t - trace.t)) > 1e-9:
        raise ValueError("re-integrated trace does not share the sample grid")

    mapped = np.array([isometry.point_map(u, v) for u, v in zip(trace.u, trace.v)])
    mismatch = np.hypot(mapped[:, 0] - reint.u, mapped[:, 1] - reint.v)
    return float(np.max(mismatch))


def _with_span(settings: IntegratorSettings, t0: float, t1: float) -> IntegratorSettings:
    return IntegratorSettings(method=settings.method, h=settings.h,
                              rtol=settings.rtol, atol=settings.atol,
                              t0=t0, t1=t1, max_steps=settings.max_steps)


def _check_commutes(trace: Trace, isometry: Isometry, field: VectorFieldSpec,
                    tol: float) -> None:
    idx = np.linspace(0, len(trace) - 1, min(20, len(trace))).astype(int)
    for i in idx:
        u, v = trace.u[i], trace.v[i]
        D = isometry.differential(u, v)
        pushed = D @ np.array(field.components(u, v))
        there = np.array(field.components(*isometry.point_map(u, v)))
        scale = 1.0 + float(np.max(np.abs(there)))
        if np.max(np.abs(pushed - there)) > tol * scale:
            raise ValueError(
                f"isometry {isometry.name!r} does not commute with field {field.name!r}"
            )


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _require_chart(trace: Trace) -> ChartGeometry:
    if trace.chart is None:
        raise ValueError("trace carries no chart; audits need the original chart")
    return trace.chart


def _resolve_field(trace: Trace, field: VectorFieldSpec | None) -> VectorFieldSpec:
    if field is None:
        if trace.field is None:
            raise ValueError("trace carries no vector field")
        return trace.field
    if trace.field is not None and field is not trace.field and field.name != trace.field.name:
        raise ValueError(
            f"field {field.name!r} does not match the trace's field {trace.field.name!r}"
        )
    return field
