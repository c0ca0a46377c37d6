"""Scenario catalog and JSON configuration ingestion.

A scenario bundles a chart, a vector field, a launch state, and a time
span.  The built-in catalog covers the reference situations exercised by
the acceptance suite: plane fields (zero, winding, shear, gradient),
sphere, pseudosphere, and catenoid launches.  Spans are capped at |t| <= 20
and chosen so the fixed-step integrator holds its speed-drift budget;
scenarios that run into chart boundaries stop there with a recorded event.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from pathlib import Path
from typing import Callable

from .audit import InvariantReport, conformal_constant, killing_curvature_check, make_report
from .errors import ConfigError
from .geometry import ChartGeometry, VectorFieldSpec, euclidean_plane, half_plane
from .integrate import GeodesicState, Trace, integrate_two_sided
from .plane import PlaneField, arcsin_invariant, flat_invariant, shear_field, winding_field
from .surfaces import CATALOG_BUILDERS, CatalogSurface, loxodrome_check


@dataclass
class Runtime:
    """Resolved chart/field pair, plus the surface when one is involved."""

    chart: ChartGeometry
    field: VectorFieldSpec
    surface: CatalogSurface | None = None
    plane_field: PlaneField | None = None


def _halfplane_sigma_runtime() -> Runtime:
    chart = half_plane(0.05)

    def components(u: float, v: float):
        return (0.0, 1.0 / v)

    fld = VectorFieldSpec(
        name="grad-log-height",
        components=components,
        sigma=lambda u, v: -math.log(v),
        sigma_grad=lambda u, v: (0.0, -1.0 / v),
    )
    pf = PlaneField(name="grad-log-height", f=lambda x, y: 0.0,
                    g=lambda x, y: 1.0 / y)
    return Runtime(chart=chart, field=fld, plane_field=pf)


@lru_cache(maxsize=None)
def build_runtime(key: str) -> Runtime:
    """Construct (and cache) one of the named chart/field pairings."""
    if key == "plane-zero":
        return Runtime(chart=euclidean_plane(), field=VectorFieldSpec.zero())
    if key == "plane-winding":
        pf = winding_field()
        return Runtime(chart=euclidean_plane(), field=pf.as_spec(), plane_field=pf)
    if key == "plane-shear":
        pf = shear_field()
        return Runtime(chart=euclidean_plane(), field=pf.as_spec(), plane_field=pf)
    if key == "halfplane-sigma":
        return _halfplane_sigma_runtime()
    if key in CATALOG_BUILDERS:
        surf = CATALOG_BUILDERS[key]()
        return Runtime(chart=surf.chart, field=surf.field, surface=surf)
    raise ConfigError(f"unknown runtime {key!r}")


@dataclass
class Scenario:
    """A launch specification against one of the named runtimes.

    Exactly one of ``velocity`` (chart components) or ``angle`` (radians to
    the meridian direction e1, velocity E (cos a e1 + sin a e2)) is given.
    """

    id: str
    runtime: str
    start: tuple[float, float]
    velocity: tuple[float, float] | None = None
    angle: float | None = None
    span: tuple[float, float] = (-20.0, 20.0)
    h: float = 1e-3
    E: float = 1.0
    description: str = ""

    def launch_state(self) -> GeodesicState:
        rt = build_runtime(self.runtime)
        u, v = self.start
        if (self.velocity is None) == (self.angle is None):
            raise ConfigError(f"scenario {self.id!r}: give either velocity or angle")
        if self.velocity is not None:
            du, dv = self.velocity
        else:
            if rt.surface is None:
                raise ConfigError(f"scenario {self.id!r}: angle launch needs a surface")
            e1 = rt.surface.frame.e1(u, v)
            e2 = rt.surface.frame.e2(u, v)
            ca, sa = math.cos(self.angle), math.sin(self.angle)
            du = self.E * (ca * e1[0] + sa * e2[0])
            dv = self.E * (ca * e1[1] + sa * e2[1])
        return GeodesicState(0.0, u, v, du, dv)


def _unit(x: float, y: float) -> tuple[float, float]:
    n = math.hypot(x, y)
    return (x / n, y / n)


#: The twelve reference scenarios, in reporting order.
CATALOG: dict[str, Scenario] = {
    s.id: s for s in [
        Scenario("plane-straight", "plane-zero", (0.0, 0.0), velocity=(1.0, 0.0),
                 description="no field; straight line"),
        Scenario("plane-winding-center", "plane-winding", (0.0, 0.0),
                 velocity=_unit(1.0, 1.0),
                 description="winding field through the origin, diagonal launch"),
        Scenario("plane-winding-offset", "plane-winding", (0.0, 2.0),
                 velocity=(1.0, 0.0),
                 description="winding field, offset start, horizontal launch"),
        Scenario("plane-shear-diagonal", "plane-shear", (1.0, 1.0),
                 velocity=_unit(1.0, 1.0),
                 description="shear field, diagonal launch; strip-confined"),
        Scenario("plane-shear-steep", "plane-shear", (1.0, 1.0),
                 velocity=_unit(-1.0, 0.5),
                 description="shear field, leftward launch; single branch"),
        Scenario("plane-gradient-halfplane", "halfplane-sigma", (0.0, 1.0),
                 velocity=(1.0, 0.0),
                 description="gradient field of -log(y) on the upper half-plane"),
        Scenario("sphere-meridian", "sphere", (math.pi / 2, 0.0), angle=0.0,
                 description="meridian launch; classical geodesic, stops at the pole cap"),
        Scenario("sphere-equator", "sphere", (math.pi / 2, 0.0), angle=math.pi / 2,
                 description="equatorial launch; stays on the equator"),
        Scenario("sphere-loxodrome-45", "sphere", (math.pi / 2, 0.0), angle=math.pi / 4,
                 span=(-2.0, 2.0),
                 description="45 degree loxodrome; span short of the pole spiral"),
        Scenario("pseudosphere-loxodrome", "pseudosphere", (2.0, 0.0),
                 angle=math.radians(85.0), span=(-10.0, 10.0),
                 description="generic pseudosphere loxodrome"),
        Scenario("pseudosphere-meridian", "pseudosphere", (1.0, 0.0), angle=0.0,
                 description="pseudosphere meridian; stops at the cusp edge"),
        Scenario("catenoid-loxodrome-45", "catenoid", (0.0, 0.0), angle=math.pi / 4,
                 description="45 degree catenoid loxodrome from the waist"),
    ]
}

CATALOG_IDS = list(CATALOG)


def run_scenario(scenario: Scenario, h: float | None = None,
                 span: tuple[float, float] | None = None,
                 method: str = "rk4") -> Trace:
    """Integrate a scenario two-sided over its span (launch at t = 0)."""
    rt = build_runtime(scenario.runtime)
    t_min, t_max = span or scenario.span
    trace = integrate_two_sided(rt.chart, rt.field, scenario.launch_state(),
                                t_min, t_max, h=h or scenario.h, method=method,
                                scenario_id=scenario.id)
    return trace


# ---------------------------------------------------------------------------
# Safe expression evaluation for inline config fields
# ---------------------------------------------------------------------------

_SAFE_NAMES: dict[str, object] = {
    name: getattr(math, name)
    for name in ("sin", "cos", "tan", "asin", "acos", "atan", "atan2",
                 "sinh", "cosh", "tanh", "asinh", "acosh", "atanh",
                 "exp", "log", "log2", "log10", "sqrt", "hypot",
                 "pi", "e", "tau")
}
_SAFE_NAMES["abs"] = abs


def compile_expr(src: str) -> Callable[[float, float], float]:
    """Compile a config expression of the chart coordinates.

    Both (x, y) and (u, v) name the two coordinates.  Only arithmetic and
    the whitelisted math functions are allowed.
    """
    try:
        code = compile(src, "<scenario-config>", "eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad expression {src!r}: {exc}") from exc
    for name in code.co_names:
        if name not in _SAFE_NAMES and name not in ("x", "y", "u", "v"):
            raise ConfigError(f"expression {src!r} uses forbidden name {name!r}")

    def fn(u: float, v: float) -> float:
        return float(eval(code, {"__builtins__": {}},
                          {**_SAFE_NAMES, "x": u, "y": v, "u": u, "v": v}))

    return fn


# ---------------------------------------------------------------------------
# JSON scenario configs
# ---------------------------------------------------------------------------

KNOWN_REPORTS = ("speed", "loxodrome", "flat-invariant", "arcsin",
                 "conformal-constant", "killing-curvature")


@dataclass
class ScenarioConfig:
    """A single JSON-configured run: selectors, launch, reports, outputs."""

    id: str
    runtime: Runtime
    scenario: Scenario
    reports: list[str] = dc_field(default_factory=list)
    method: str = "rk4"

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        if raw.get("version") != 1:
            raise ConfigError("config version must be 1")
        sid = raw.get("id")
        if not isinstance(sid, str) or not sid:
            raise ConfigError("config needs a nonempty string 'id'")

        reports = raw.get("reports", [])
        if not isinstance(reports, list) or any(r not in KNOWN_REPORTS for r in reports):
            raise ConfigError(f"reports must be a list drawn from {KNOWN_REPORTS}")
        method = raw.get("integrator", {}).get("method", "rk4")
        if method not in ("rk4", "rk45"):
            raise ConfigError(f"unknown integrator method {method!r}")

        if "scenario" in raw:
            base = CATALOG.get(raw["scenario"])
            if base is None:
                raise ConfigError(f"unknown catalog scenario {raw['scenario']!r}")
            rt = build_runtime(base.runtime)
            scen = Scenario(id=sid, runtime=base.runtime, start=base.start,
                            velocity=base.velocity, angle=base.angle,
                            span=tuple(raw.get("span", base.span)),
                            h=float(raw.get("integrator", {}).get("h", base.h)))
            return cls(id=sid, runtime=rt, scenario=scen, reports=reports, method=method)

        rt = _resolve_runtime(raw)
        scen = _resolve_launch(sid, raw, rt)
        return cls(id=sid, runtime=rt, scenario=scen, reports=reports, method=method)

    def run(self) -> tuple[Trace, list[InvariantReport]]:
        return run_config(self)


def _resolve_runtime(raw: dict) -> Runtime:
    chart_sel = raw.get("chart")
    field_sel = raw.get("field", "zero")

    surface = None
    if isinstance(chart_sel, str):
        if chart_sel == "plane":
            chart = euclidean_plane()
        elif chart_sel == "half-plane":
            chart = half_plane(float(raw.get("y_min", 0.05)))
        elif chart_sel in CATALOG_BUILDERS:
            surface = CATALOG_BUILDERS[chart_sel]()
            chart = surface.chart
        else:
            raise ConfigError(f"unknown chart {chart_sel!r}")
    elif isinstance(chart_sel, dict) and "surface" in chart_sel:
        name = chart_sel["surface"]
        if name not in CATALOG_BUILDERS:
            raise ConfigError(f"unknown surface {name!r}")
        surface = CATALOG_BUILDERS[name]()
        chart = surface.chart
    elif isinstance(chart_sel, dict) and "metric" in chart_sel:
        comp = chart_sel["metric"]
        try:
            g11 = compile_expr(comp["g11"])
            g12 = compile_expr(comp.get("g12", "0"))
            g22 = compile_expr(comp["g22"])
        except KeyError as exc:
            raise ConfigError(f"inline metric needs g11 and g22: {exc}") from exc
        bounds = tuple(float(b) for b in chart_sel.get("bounds", (-math.inf, math.inf, -math.inf, math.inf)))
        if len(bounds) != 4:
            raise ConfigError("bounds must have four entries")
        chart = ChartGeometry(
            name=chart_sel.get("name", "inline"),
            metric=lambda u, v: (g11(u, v), g12(u, v), g22(u, v)),
            bounds=bounds,
            sample_box=tuple(chart_sel["sample_box"]) if "sample_box" in chart_sel else None,
        )
    else:
        raise ConfigError("config needs a 'chart' selector")

    field = _resolve_field(field_sel, chart, surface)
    return Runtime(chart=chart, field=field, surface=surface)


def _resolve_field(sel, chart: ChartGeometry, surface: CatalogSurface | None) -> VectorFieldSpec:
    if sel == "zero":
        return VectorFieldSpec.zero()
    if sel == "winding":
        return winding_field().as_spec()
    if sel == "shear":
        return shear_field().as_spec()
    if sel == "catalog":
        if surface is None:
            raise ConfigError("field 'catalog' needs a surface chart")
        return surface.field
    if isinstance(sel, dict) and "sigma" in sel:
        sigma = compile_expr(sel["sigma"])
        return VectorFieldSpec.minus_grad("config-sigma", sigma, chart)
    if isinstance(sel, dict) and "p" in sel:
        p = compile_expr(sel["p"])

        def f(x: float, y: float) -> float:
            h = 1e-6 * max(1.0, abs(y))
            return (p(x, y + h) - p(x, y - h)) / (2.0 * h)

        def g(x: float, y: float) -> float:
            h = 1e-6 * max(1.0, abs(x))
            return -(p(x + h, y) - p(x - h, y)) / (2.0 * h)

        return PlaneField(name="config-p", f=f, g=g, potential=p).as_spec()
    if isinstance(sel, dict) and "f" in sel and "g" in sel:
        f = compile_expr(sel["f"])
        g = compile_expr(sel["g"])
        return PlaneField(name="config-inline", f=f, g=g).as_spec()
    raise ConfigError(f"cannot resolve field selector {sel!r}")


def _resolve_launch(sid: str, raw: dict, rt: Runtime) -> Scenario:
    init = raw.get("initial")
    if not isinstance(init, dict) or "position" not in init:
        raise ConfigError("config needs initial.position")
    pos = tuple(float(x) for x in init["position"])
    if len(pos) != 2:
        raise ConfigError("initial.position must have two entries")
    has_vel = "velocity" in init
    has_ang = "angle_deg" in init or "angle" in init
    if has_vel == has_ang:
        raise ConfigError("give exactly one of initial.velocity or initial.angle")
    velocity = None
    angle = None
    if has_vel:
        velocity = tuple(float(x) for x in init["velocity"])
        if len(velocity) != 2 or velocity == (0.0, 0.0):
            raise ConfigError("initial.velocity must be a nonzero pair")
    else:
        angle = math.radians(float(init["angle_deg"])) if "angle_deg" in init else float(init["angle"])
    span = raw.get("span", (-1.0, 1.0))
    if not (isinstance(span, (list, tuple)) and len(span) == 2 and span[0] <= 0.0 <= span[1]):
        raise ConfigError("span must be [t_min, t_max] containing 0")
    integ = raw.get("integrator", {})
    return Scenario(id=sid, runtime="__inline__", start=pos, velocity=velocity,
                    angle=angle, span=(float(span[0]), float(span[1])),
                    h=float(integ.get("h", 1e-3)), E=float(init.get("E", 1.0)))


def run_config(config: ScenarioConfig) -> tuple[Trace, list[InvariantReport]]:
    """Integrate a resolved config and compute its requested reports."""
    scen = config.scenario
    rt = config.runtime
    if scen.runtime == "__inline__":
        if scen.velocity is not None:
            state = GeodesicState(0.0, scen.start[0], scen.start[1], *scen.velocity)
        else:
            if rt.surface is None:
                raise ConfigError("angle launch needs a surface chart")
            e1 = rt.surface.frame.e1(*scen.start)
            e2 = rt.surface.frame.e2(*scen.start)
            ca, sa = math.cos(scen.angle), math.sin(scen.angle)
            state = GeodesicState(0.0, scen.start[0], scen.start[1],
                                  scen.E * (ca * e1[0] + sa * e2[0]),
                                  scen.E * (ca * e1[1] + sa * e2[1]))
        trace = integrate_two_sided(rt.chart, rt.field, state, scen.span[0], scen.span[1],
                                    h=scen.h, method=config.method, scenario_id=scen.id)
    else:
        trace = run_scenario(scen, method=config.method)
    reports = [execute_report(name, trace, rt) for name in config.reports]
    return trace, reports


def execute_report(name: str, trace: Trace, rt: Runtime) -> InvariantReport:
    """Run one named invariant report against a trace."""
    if name == "speed":
        rep = make_report("speed", trace.t, trace.speed)
        rep.max_dev = trace.max_speed_drift()
        rep.threshold = 1e-6
        rep.passed = rep.max_dev < 1e-6
        return rep
    if name == "loxodrome":
        if rt.surface is None:
            raise ConfigError("loxodrome report needs a surface scenario")
        return loxodrome_check(trace, rt.surface)
    if name == "flat-invariant":
        return flat_invariant(trace)
    if name == "arcsin":
        return arcsin_invariant(trace)
    if name == "conformal-constant":
        return conformal_constant(trace)
    if name == "killing-curvature":
        return killing_curvature_check(trace)
    raise ConfigError(f"unknown report {name!r}")
