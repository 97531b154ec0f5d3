"""Explicit time stepping for the curve shortening flow on the cylinder.

Vertices move with the purely normal velocity (-kappa N), i.e.

    dtheta/dt = kappa * b / r(z),      dz/dt = -kappa * a,

so vertex indices track material points between remeshes. The step size
obeys the parabolic restriction dt = cfl * (min ds)^2 and the mesh is
re-equidistributed on a fixed cadence or when edge lengths spread by more
than a trigger ratio.

``run`` drives a whole scenario: it lands exactly on every sampling time,
records a diagnostics row there, and opens a three-state window (two extra
unremeshed micro-steps at frozen dt) to evaluate the evolution-equation
residuals with vertex correspondence intact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as _k
from ._ode import baseline_circle_ode, integrate_circle_heights
from .curve import DiscreteCurve, build_geometry
from .errors import Blowup, Collapse, InitialOrderViolated, InvalidParams
from . import diagnostics as _diag

COLLAPSE_FRAC = 1e-4
BLOWUP_PRODUCT = 1.0

_EVENT_KINDS = {
    _k.EV_DOMAIN: "domain_exceeded",
    _k.EV_COLLAPSE: "collapse",
    _k.EV_BLOWUP: "blowup",
    _k.EV_FLOOR: "z_floor",
    _k.EV_DEGENERATE: "degenerate_edge",
}

TERMINAL_ERROR_KINDS = frozenset(_EVENT_KINDS.values())


@dataclass(frozen=True)
class SolverParams:
    cfl: float = 0.25
    remesh_every: int = 20
    remesh_ratio_trigger: float = 2.0
    t_end: float = 1.0
    z_floor: float = -1e9
    graph_margin: float = 1e-3
    sample_dt: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.cfl <= 0.5:
            raise InvalidParams("cfl must lie in (0, 0.5]")
        if self.remesh_every < 1:
            raise InvalidParams("remesh_every must be >= 1")
        if self.remesh_ratio_trigger <= 1.0:
            raise InvalidParams("remesh_ratio_trigger must be > 1")
        if self.t_end <= 0.0:
            raise InvalidParams("t_end must be > 0")
        if self.sample_dt <= 0.0:
            raise InvalidParams("sample_dt must be > 0")
        if self.graph_margin <= 0.0:
            raise InvalidParams("graph_margin must be > 0")


@dataclass(frozen=True)
class FlowEvent:
    t: float
    kind: str
    detail: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {"t": self.t, "kind": self.kind, "detail": self.detail}


@dataclass
class FlowState:
    """A curve at a flow time, plus bookkeeping for remesh correspondence."""

    curve: DiscreteCurve
    t: float
    initial_length: float
    dt_last: float = 0.0
    steps_since_remesh: int = 0
    remesh_count: int = 0
    event_log: list = field(default_factory=list)
    _geom: object = field(default=None, repr=False, compare=False)

    def geometry(self, w):
        if self._geom is None:
            self._geom = build_geometry(self.curve, w)
        return self._geom


def make_state(curve, w, t=0.0):
    g = build_geometry(curve, w)
    st = FlowState(curve=curve, t=float(t), initial_length=g.length)
    st._geom = g
    return st


def velocity(curve, w, geometry=None):
    """(dtheta/dt, dz/dt) of every vertex under -kappa N."""
    g = geometry if geometry is not None else build_geometry(curve, w)
    return g.kappa * g.b / g.r, -g.kappa * g.a


def step(state, params, w, remesh_allowed=True, dt=None):
    """One explicit midpoint step, by default at dt = cfl * (min ds)^2.

    Pass ``dt`` to pin the step size; residual windows need three states at
    exactly equal spacing, which the adaptive rule cannot give. Raises
    DomainExceeded / Collapse / Blowup / DegenerateEdge instead of silently
    producing garbage; ``run`` converts these into terminal events.
    """
    g = state.geometry(w)
    if g.length < COLLAPSE_FRAC * state.initial_length:
        raise Collapse(f"L = {g.length:.3e} below 1e-4 of initial")
    mn = float(np.min(g.ds))
    if float(np.max(np.abs(g.kappa))) * mn > BLOWUP_PRODUCT:
        raise Blowup("max|kappa| * min ds exceeded 1")
    if dt is None:
        dt = params.cfl * mn * mn
    elif dt <= 0.0:
        raise InvalidParams("dt must be > 0")
    code, kp = w.kernel_args
    th, z = _k.rk2_step(
        state.curve.theta, state.curve.z, state.curve.closure_offset, code, kp, dt
    )
    since = state.steps_since_remesh + 1
    count = state.remesh_count
    mx = float(np.max(g.ds))
    if remesh_allowed and (
        since >= params.remesh_every or mx / mn > params.remesh_ratio_trigger
    ):
        th, z = _k.remesh_uniform(
            th, z, state.curve.closure_offset, code, kp, state.curve.n
        )
        since = 0
        count += 1
    nxt = DiscreteCurve._unsafe(th, z, state.curve.closure_offset)
    log = list(state.event_log)
    if count > state.remesh_count:
        log.append((state.t + dt, "remesh"))
    new = FlowState(
        curve=nxt,
        t=state.t + dt,
        initial_length=state.initial_length,
        dt_last=dt,
        steps_since_remesh=since,
        remesh_count=count,
        event_log=log,
    )
    new.geometry(w)  # validates the stepped state eagerly
    return new


def _micro_step(theta, z, coff, code, kp, dt):
    return _k.rk2_step(theta, z, coff, code, kp, dt)


@dataclass
class Trajectory:
    """Sampled history of one run."""

    records: list
    sample_curves: list
    events: list
    trends: dict
    final_curve: DiscreteCurve
    final_t: float
    terminal: FlowEvent
    initial_length: float
    graph_time: Optional[float] = None

    @property
    def ok(self):
        return self.terminal.kind == "finished"

    def record_at_or_after(self, t):
        for rec in self.records:
            if rec.t >= t - 1e-12:
                return rec
        return self.records[-1]


def detect_graph_time(trajectory_or_records, margin):
    """First sample time with min Theta > margin that stays positive after.

    Returns None when no such sample exists within the horizon.
    """
    records = getattr(trajectory_or_records, "records", trajectory_or_records)
    mins = np.array([r.min_theta for r in records])
    if mins.size == 0:
        return None
    suffix = np.minimum.accumulate(mins[::-1])[::-1]
    hits = np.where((mins > margin) & (suffix > 0.0))[0]
    if hits.size == 0:
        return None
    return float(records[int(hits[0])].t)


def _guard_event(theta, z, kap, ds, L, L0, t, params, domain_upper):
    zmax = float(np.max(z))
    zmin = float(np.min(z))
    if not np.isfinite(L) or float(np.min(ds)) <= 0.0:
        return FlowEvent(t, "degenerate_edge", {"min_ds": float(np.min(ds))})
    if zmax >= domain_upper:
        i = int(np.argmax(z))
        return FlowEvent(t, "domain_exceeded", {"vertex": i, "z": zmax})
    if zmin <= params.z_floor:
        i = int(np.argmin(z))
        return FlowEvent(t, "z_floor", {"vertex": i, "z": zmin})
    if L < COLLAPSE_FRAC * L0:
        return FlowEvent(t, "collapse", {"length": L})
    if float(np.max(np.abs(kap))) * float(np.min(ds)) > BLOWUP_PRODUCT:
        i = int(np.argmax(np.abs(kap)))
        return FlowEvent(t, "blowup", {"vertex": i, "kappa": float(kap[i])})
    return None


def run(config):
    """Integrate a full scenario and return its Trajectory.

    ``config`` provides: warp (WarpingFunction), curve (DiscreteCurve),
    solver (SolverParams), lemma32_c0 (float), comparison_bounds
    (None or (z_lower0, z_upper0)). Deterministic: identical configs give
    identical trajectories bit for bit.
    """
    w = config.warp
    params = config.solver
    code, kp = w.kernel_args
    curve0 = config.curve
    g0 = build_geometry(curve0, w)
    L0 = g0.length
    coff = curve0.closure_offset
    n = curve0.n

    bounds = config.comparison_bounds
    if bounds is not None:
        zl0, zu0 = bounds
        if not (zl0 < float(np.min(curve0.z))):
            raise InitialOrderViolated(
                f"z_lower0 = {zl0} does not sit strictly below the curve"
            )
        if not (float(np.max(curve0.z)) < zu0 < w.domain_upper):
            raise InitialOrderViolated(
                f"z_upper0 = {zu0} must lie strictly between the curve and "
                f"domain_upper"
            )

    n_samples = int(math.floor(params.t_end / params.sample_dt + 1e-9))
    sample_ts = [k * params.sample_dt for k in range(n_samples + 1)]
    if sample_ts[-1] < params.t_end - 1e-9 * params.sample_dt:
        sample_ts.append(params.t_end)

    theta = curve0.theta.copy()
    z = curve0.z.copy()
    t = 0.0
    since = 0
    records = []
    curves = []
    events = []
    trend = {0: [], 1: [], 2: []}
    terminal = None

    for k, tk in enumerate(sample_ts):
        if t < tk:
            theta, z, t, since, ev, _ = _k.advance(
                theta, z, coff, code, kp, t, tk, params.cfl, L0,
                COLLAPSE_FRAC, since, params.remesh_every,
                params.remesh_ratio_trigger, params.z_floor, w.domain_upper,
            )
            if ev != _k.EV_NONE:
                ds, a, b, kap, L, rv = _k.geometry(theta, z, coff, code, kp)
                detail_ev = FlowEvent(t, _EVENT_KINDS[ev], _event_detail(ev, z, kap, ds, L))
                events.append(detail_ev)
                terminal = detail_ev
                break

        ds, a, b, kap, L, rv = _k.geometry(theta, z, coff, code, kp)
        guard = _guard_event(theta, z, kap, ds, L, L0, t, params, w.domain_upper)
        if guard is not None:
            events.append(guard)
            terminal = guard
            break

        cur = DiscreteCurve._unsafe(theta.copy(), z.copy(), coff)
        geom = _diag.geometry_from_arrays(ds, a, b, kap, L, rv)
        rec = _diag.sample_record(t, geom, cur.z, w, config.lemma32_c0)
        records.append(rec)
        curves.append(cur)
        trend[0].append(rec.max_abs_kappa)
        trend[1].append(float(np.max(np.abs(_k.d1_cyclic(kap, ds)))))
        trend[2].append(float(np.max(np.abs(_k.d2_cyclic(kap, ds)))))

        is_last = k == len(sample_ts) - 1
        dtw = params.cfl * float(np.min(ds)) ** 2
        if not is_last and 2.0 * dtw < 0.5 * params.sample_dt:
            th1, z1 = _micro_step(theta, z, coff, code, kp, dtw)
            th2, z2 = _micro_step(th1, z1, coff, code, kp, dtw)
            rec.res_theta_pde, rec.res_kappa_sq_pde = _diag.window_residuals(
                (theta, z), (th1, z1), (th2, z2), coff, w, dtw
            )
            theta, z = th2, z2
            t = t + 2.0 * dtw
            since += 2

    if terminal is None:
        terminal = FlowEvent(sample_ts[-1], "finished", {"samples": len(records)})
        events.append(terminal)

    _diag.fill_length_decay(records)

    if bounds is not None and records:
        ts = np.array([r.t for r in records])
        lo = integrate_circle_heights(w, bounds[0], ts)
        hi = integrate_circle_heights(w, bounds[1], ts)
        for rec, zl, zu in zip(records, lo, hi):
            rec.comparison_ok = bool(zl < rec.z_min and rec.z_max < zu)

    traj = Trajectory(
        records=records,
        sample_curves=curves,
        events=events,
        trends={m: np.array(v) for m, v in trend.items()},
        final_curve=DiscreteCurve._unsafe(theta, z, coff),
        final_t=t,
        terminal=terminal,
        initial_length=L0,
    )
    t0 = detect_graph_time(traj, params.graph_margin)
    traj.graph_time = t0
    if t0 is not None:
        traj.events.append(FlowEvent(t0, "graph_attained", {"margin": params.graph_margin}))
        traj.events.sort(key=lambda e: e.t)
    return traj


def _event_detail(ev, z, kap, ds, L):
    if ev == _k.EV_DOMAIN:
        i = int(np.argmax(z))
        return {"vertex": i, "z": float(z[i])}
    if ev == _k.EV_FLOOR:
        i = int(np.argmin(z))
        return {"vertex": i, "z": float(z[i])}
    if ev == _k.EV_COLLAPSE:
        return {"length": float(L)}
    if ev == _k.EV_BLOWUP:
        i = int(np.argmax(np.abs(kap)))
        return {"vertex": i, "kappa": float(kap[i])}
    return {"min_ds": float(np.min(ds))}


__all__ = [
    "SolverParams",
    "FlowEvent",
    "FlowState",
    "Trajectory",
    "make_state",
    "velocity",
    "step",
    "run",
    "detect_graph_time",
    "baseline_circle_ode",
    "integrate_circle_heights",
    "COLLAPSE_FRAC",
    "TERMINAL_ERROR_KINDS",
]
