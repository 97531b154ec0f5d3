"""warpcsf: curve shortening flow on warped product cylinders.

The surface is S^1 x (-inf, a) with metric r(z)^2 dtheta^2 + dz^2 for a
positive warping function r. Closed curves with winding number one evolve
by their geodesic curvature; this package integrates that flow, monitors
the quantities its long-time behavior is governed by, and grades runs
against configurable checks.

Quick start::

    from warpcsf import WarpingFunction, circle, make_state, step

    w = WarpingFunction.reciprocal()
    state = make_state(circle(z0=-2.0, n=128), w)
    state = step(state, SolverParams(t_end=1.0), w)
"""

from .errors import (
    Blowup,
    Collapse,
    DegenerateEdge,
    DomainExceeded,
    HypothesisNotMet,
    InitialOrderViolated,
    InsufficientSamples,
    InvalidParams,
    NotClosed,
    OrderUnavailable,
    ParseError,
    RemeshInWindow,
    ThetaTooSmall,
    UnknownCheck,
    UnknownFamily,
    UnknownPreset,
    WarpcsfError,
)
from .warp import (
    ConditionGrid,
    ConditionReport,
    WarpingFunction,
    check_conditions,
)
from .curve import (
    CurveGeometry,
    DiscreteCurve,
    PRESETS,
    build_geometry,
    circle,
    contractible,
    fold,
    graph_sine,
    is_graph,
    make_preset,
    remesh,
)
from .flow import (
    FlowEvent,
    FlowState,
    SolverParams,
    Trajectory,
    baseline_circle_ode,
    detect_graph_time,
    integrate_circle_heights,
    make_state,
    run,
    step,
    velocity,
)
from .diagnostics import (
    DiagnosticsRecord,
    Lemma32Result,
    comparison_check,
    derivative_trend,
    kappa_sq_pde_residual,
    lemma32_check,
    length_decay_residual,
    theta_pde_residual,
    v_pde_residual,
)
from .config import (
    CheckSpec,
    OutputSpec,
    ScenarioConfig,
    config_hash,
    parse_config,
    parse_config_text,
    scenario_path,
    serialize,
    shipped_scenarios,
)
from .cli import RunSummary, evaluate_checks, execute_run, main

__version__ = "0.1.0"

__all__ = [
    "WarpcsfError", "InvalidParams", "DomainExceeded", "OrderUnavailable",
    "DegenerateEdge", "NotClosed", "Collapse", "Blowup",
    "InsufficientSamples", "RemeshInWindow", "ThetaTooSmall",
    "HypothesisNotMet", "InitialOrderViolated", "ParseError",
    "UnknownFamily", "UnknownPreset", "UnknownCheck",
    "WarpingFunction", "ConditionGrid", "ConditionReport", "check_conditions",
    "DiscreteCurve", "CurveGeometry", "build_geometry", "is_graph", "remesh",
    "circle", "graph_sine", "fold", "contractible", "make_preset", "PRESETS",
    "SolverParams", "FlowState", "FlowEvent", "Trajectory",
    "make_state", "velocity", "step", "run", "detect_graph_time",
    "baseline_circle_ode", "integrate_circle_heights",
    "DiagnosticsRecord", "Lemma32Result", "length_decay_residual",
    "theta_pde_residual", "v_pde_residual", "kappa_sq_pde_residual",
    "lemma32_check", "comparison_check", "derivative_trend",
    "ScenarioConfig", "CheckSpec", "OutputSpec",
    "parse_config", "parse_config_text", "serialize", "config_hash",
    "shipped_scenarios", "scenario_path",
    "RunSummary", "evaluate_checks", "execute_run", "main",
    "__version__",
]
