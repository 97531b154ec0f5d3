"""Monitored scalars, evolution-equation residuals, and inequality checks.

Everything here is a pure function of curve snapshots. The PDE residuals
need vertex correspondence across three consecutive states (no remesh in
between) and centered time differences; the flow driver schedules such
windows at the sampling cadence and hands the raw states over.

Sign conventions match the flow module: kappa is measured against the
inward normal, a horizontal circle has kappa = r'/r, and the tangent angle
function Theta equals the theta-component of the unit tangent times r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from ._ode import integrate_circle_heights
from .curve import CurveGeometry, build_geometry
from .errors import (
    HypothesisNotMet,
    InitialOrderViolated,
    InsufficientSamples,
    InvalidParams,
    RemeshInWindow,
    ThetaTooSmall,
)

NAN = float("nan")

CSV_HEADER = (
    "t,L,minTheta,maxV,maxAbsKappa,intKappaSq,psi,zMin,zMax,"
    "resLengthDecay,resThetaPDE,resKappaSqPDE,lemma32Slack,comparisonOk"
)

_V_THETA_FLOOR = 0.1
_SPACING_RTOL = 1e-6


@dataclass
class DiagnosticsRecord:
    """One sampled row of the monitored quantities.

    Residual fields start as nan and are filled in by the flow driver once
    the relevant window or neighbor samples exist. ``comparison_ok`` stays
    None when no comparison bounds were configured.
    """

    t: float
    length: float
    min_theta: float
    max_v: float
    max_abs_kappa: float
    int_kappa_sq: float
    psi: float
    z_min: float
    z_max: float
    res_length_decay: float = NAN
    res_theta_pde: float = NAN
    res_kappa_sq_pde: float = NAN
    lemma32_slack: float = NAN
    comparison_ok: object = None

    def csv_row(self):
        vals = [
            self.t, self.length, self.min_theta, self.max_v,
            self.max_abs_kappa, self.int_kappa_sq, self.psi,
            self.z_min, self.z_max, self.res_length_decay,
            self.res_theta_pde, self.res_kappa_sq_pde, self.lemma32_slack,
        ]
        cells = [repr(float(v)) for v in vals]
        if self.comparison_ok is None:
            cells.append("")
        else:
            cells.append("true" if self.comparison_ok else "false")
        return ",".join(cells)

    def to_json_dict(self):
        def num(v):
            v = float(v)
            return v if math.isfinite(v) else None

        return {
            "t": num(self.t),
            "L": num(self.length),
            "minTheta": num(self.min_theta),
            "maxV": num(self.max_v),
            "maxAbsKappa": num(self.max_abs_kappa),
            "intKappaSq": num(self.int_kappa_sq),
            "psi": num(self.psi),
            "zMin": num(self.z_min),
            "zMax": num(self.z_max),
            "resLengthDecay": num(self.res_length_decay),
            "resThetaPDE": num(self.res_theta_pde),
            "resKappaSqPDE": num(self.res_kappa_sq_pde),
            "lemma32Slack": num(self.lemma32_slack),
            "comparisonOk": self.comparison_ok,
        }


def geometry_from_arrays(ds, a, b, kappa, length, r):
    return CurveGeometry(ds=ds, a=a, b=b, kappa=kappa, length=float(length), r=r)


def sample_record(t, geom, z, w, lemma32_c0=0.0):
    """Build a DiagnosticsRecord from one curve geometry."""
    min_theta = float(np.min(geom.a))
    max_v = 1.0 / min_theta if min_theta > 0.0 else float("inf")
    ik2 = float(geom.integrate(geom.kappa * geom.kappa))
    rec = DiagnosticsRecord(
        t=float(t),
        length=geom.length,
        min_theta=min_theta,
        max_v=max_v,
        max_abs_kappa=float(np.max(np.abs(geom.kappa))),
        int_kappa_sq=ik2,
        psi=geom.length * ik2,
        z_min=float(np.min(z)),
        z_max=float(np.max(z)),
    )
    res = _lemma32_from_geom(geom, z, w, lemma32_c0)
    if not res.skipped:
        rec.lemma32_slack = res.slack
    return rec


# ---------------------------------------------------------------------------
# length decay

def length_decay_residual(samples):
    """|centered dL/dt + integral of kappa^2| at the middle of 3 samples.

    ``samples`` must be three consecutive records with equal time spacing.
    """
    if len(samples) != 3:
        raise InsufficientSamples("need exactly three consecutive samples")
    t0, t1, t2 = (float(s.t) for s in samples)
    d01, d12 = t1 - t0, t2 - t1
    if d01 <= 0.0 or d12 <= 0.0:
        raise InsufficientSamples("sample times must increase")
    if abs(d12 - d01) > _SPACING_RTOL * d01:
        raise InsufficientSamples(
            f"unequal sample spacing: {d01!r} then {d12!r}"
        )
    dldt = (samples[2].length - samples[0].length) / (t2 - t0)
    return abs(dldt + samples[1].int_kappa_sq)


def fill_length_decay(records):
    """Populate res_length_decay on every interior equally spaced sample."""
    for i in range(1, len(records) - 1):
        window = records[i - 1 : i + 2]
        try:
            records[i].res_length_decay = length_decay_residual(window)
        except InsufficientSamples:
            continue
    return records


# ---------------------------------------------------------------------------
# PDE residuals

def _window_geometry(states, w):
    """Validate a 3-state window and return per-state geometry arrays."""
    if len(states) != 3:
        raise InsufficientSamples("a residual window holds exactly 3 states")
    s0, s1, s2 = states
    n = s0.curve.n
    if s1.curve.n != n or s2.curve.n != n:
        raise RemeshInWindow("vertex count changed inside the window")
    if not (s0.remesh_count == s1.remesh_count == s2.remesh_count):
        raise RemeshInWindow("remesh occurred inside the window")
    d01 = s1.t - s0.t
    d12 = s2.t - s1.t
    if d01 <= 0.0 or abs(d12 - d01) > _SPACING_RTOL * d01:
        raise InsufficientSamples("window states must be equally spaced in t")
    geoms = [st.geometry(w) for st in states]
    return geoms, [st.curve.z for st in states], d01


def _warp_coeffs(w, z):
    r0 = w.eval(z, 0)
    r1 = w.eval(z, 1)
    r2 = w.eval(z, 2)
    q = (r0 * r2 - 2.0 * r1 * r1) / (r0 * r0)
    return r0, r1, r2, q


def theta_pde_residual(states, w):
    """Sup-norm defect of the Theta evolution equation on a 3-state window.

    Discretizes (d/dt - Laplacian) Theta against
    q * Theta * (1 - Theta^2) + ((r'/r) Theta - kappa)^2 * Theta
    with q = (r r'' - 2 r'^2) / r^2, all evaluated at the middle state.
    """
    (g0, g1, g2), (z0, z1, z2), dt = _window_geometry(states, w)
    ddt = (g2.a - g0.a) / (2.0 * dt)
    lap = _k.d2_cyclic(g1.a, g1.ds)
    r0, r1, _, q = _warp_coeffs(w, z1)
    drive = (r1 / r0) * g1.a - g1.kappa
    rhs = q * g1.a * (1.0 - g1.a * g1.a) + drive * drive * g1.a
    return float(np.max(np.abs(ddt - lap - rhs)))


def v_pde_residual(states, w):
    """Sup-norm defect of the v = 1/Theta evolution equation.

    Requires Theta >= 0.1 across the whole window so that v is
    well-conditioned; otherwise raises ThetaTooSmall.
    """
    (g0, g1, g2), (z0, z1, z2), dt = _window_geometry(states, w)
    floor = min(float(np.min(g.a)) for g in (g0, g1, g2))
    if floor < _V_THETA_FLOOR:
        raise ThetaTooSmall(f"min Theta {floor:.4f} < {_V_THETA_FLOOR}")
    v0, v1, v2 = 1.0 / g0.a, 1.0 / g1.a, 1.0 / g2.a
    ddt = (v2 - v0) / (2.0 * dt)
    lap = _k.d2_cyclic(v1, g1.ds)
    dsv = _k.d1_cyclic(v1, g1.ds)
    r0, r1, _, q = _warp_coeffs(w, z1)
    drive = (r1 / r0) * g1.a - g1.kappa
    rhs = (
        -(2.0 / v1) * dsv * dsv
        - q * (v1 - 1.0 / v1)
        - drive * drive * v1
    )
    return float(np.max(np.abs(ddt - lap - rhs)))


def kappa_sq_pde_residual(states, w):
    """Sup-norm defect of the kappa^2 evolution equation.

    Discretizes (d/dt - Laplacian) kappa^2 against
    -2 |d kappa/ds|^2 + 2 kappa^2 (kappa^2 + Kbar) with the ambient
    Gauss curvature Kbar = -r''/r at the middle state.
    """
    (g0, g1, g2), (z0, z1, z2), dt = _window_geometry(states, w)
    k0sq = g0.kappa * g0.kappa
    k1 = g1.kappa
    k2sq = g2.kappa * g2.kappa
    ddt = (k2sq - k0sq) / (2.0 * dt)
    lap = _k.d2_cyclic(k1 * k1, g1.ds)
    dsk = _k.d1_cyclic(k1, g1.ds)
    r0, _, r2, _ = _warp_coeffs(w, z1)
    kbar = -r2 / r0
    rhs = -2.0 * dsk * dsk + 2.0 * k1 * k1 * (k1 * k1 + kbar)
    return float(np.max(np.abs(ddt - lap - rhs)))


class _ArrayState:
    """Adapter so the raw-array windows from the flow driver can reuse the
    FlowState-based residual entry points."""

    __slots__ = ("curve", "t", "remesh_count", "_geom")

    class _C:
        __slots__ = ("n", "z")

        def __init__(self, n, z):
            self.n = n
            self.z = z

    def __init__(self, theta, z, coff, w, t):
        code, kp = w.kernel_args
        ds, a, b, kap, L, rv = _k.geometry(theta, z, coff, code, kp)
        self.curve = _ArrayState._C(theta.shape[0], z)
        self.t = t
        self.remesh_count = 0
        self._geom = geometry_from_arrays(ds, a, b, kap, L, rv)

    def geometry(self, w):
        return self._geom


def window_residuals(s0, s1, s2, coff, w, dt):
    """(theta residual, kappa^2 residual) for one raw three-state window."""
    states = [
        _ArrayState(th, z, coff, w, i * dt)
        for i, (th, z) in enumerate((s0, s1, s2))
    ]
    return theta_pde_residual(states, w), kappa_sq_pde_residual(states, w)


# ---------------------------------------------------------------------------
# inequality checks

@dataclass(frozen=True)
class Lemma32Result:
    """Outcome of the curvature-versus-length inequality check.

    ``skipped`` is the skip marker for states whose min Theta already
    exceeds the threshold c0 (the bound's hypothesis fails there, which is
    not an error). ``chain_slack`` reports the companion bound
    d0^2 <= 2 (int |r'/r| ds)^2 + 2 (int |kappa| ds)^2.
    """

    slack: float
    chain_slack: float
    skipped: bool
    min_theta: float
    c0: float

    @property
    def holds(self):
        return self.skipped or self.slack >= -1e-8


def _lemma32_from_geom(geom, z, w, c0):
    if not 0.0 <= c0 < 1.0:
        raise InvalidParams("c0 must lie in [0, 1)")
    min_theta = float(np.min(geom.a))
    if min_theta > c0:
        return Lemma32Result(NAN, NAN, True, min_theta, c0)
    d0 = 1.0 - c0
    logd = w.eval(z, 1) / w.eval(z, 0)
    max_logd_sq = float(np.max(logd * logd))
    max_kap_sq = float(np.max(geom.kappa * geom.kappa))
    L = geom.length
    lhs = 1.0 / (2.0 * L * L) - max_kap_sq / (d0 * d0)
    rhs = max_logd_sq / (d0 * d0)
    slack = rhs - lhs
    int_abs_logd = float(geom.integrate(np.abs(logd)))
    int_abs_kap = float(geom.integrate(np.abs(geom.kappa)))
    chain = 2.0 * int_abs_logd**2 + 2.0 * int_abs_kap**2 - d0 * d0
    return Lemma32Result(slack, chain, False, min_theta, c0)


def lemma32_check(curve, w, c0=0.0):
    """Check the lower curvature/length bound on one curve.

    Returns a Lemma32Result; when min Theta > c0 the hypothesis fails and
    the result is a skip marker (slack = nan, skipped = True). Callers who
    require the hypothesis can raise HypothesisNotMet on a skip.
    """
    geom = build_geometry(curve, w)
    return _lemma32_from_geom(geom, curve.z, w, c0)


def require_lemma32(curve, w, c0=0.0):
    res = lemma32_check(curve, w, c0)
    if res.skipped:
        raise HypothesisNotMet(
            f"min Theta {res.min_theta:.4f} exceeds c0 = {c0}"
        )
    return res


def comparison_check(traj, w, z_lower0, z_upper0):
    """Strict sandwich between two baseline circles, one bool per sample.

    The baselines start at z_lower0 (below the curve) and z_upper0 (above
    it, below domain_upper) and follow dz/dt = -r'(z)/r(z).
    """
    records = traj.records
    if not records:
        raise InsufficientSamples("trajectory has no samples")
    r0 = records[0]
    if not z_lower0 < r0.z_min:
        raise InitialOrderViolated(
            f"z_lower0 = {z_lower0} is not strictly below the initial curve"
        )
    if not (r0.z_max < z_upper0 < w.domain_upper):
        raise InitialOrderViolated(
            f"z_upper0 = {z_upper0} must lie strictly between the initial "
            f"curve and domain_upper"
        )
    ts = np.array([r.t for r in records])
    lo = integrate_circle_heights(w, z_lower0, ts)
    hi = integrate_circle_heights(w, z_upper0, ts)
    out = np.empty(len(records), dtype=bool)
    for i, rec in enumerate(records):
        out[i] = bool(lo[i] < rec.z_min and rec.z_max < hi[i])
    return out


def derivative_trend(traj, m, w=None):
    """Per-sample max of |m-th arclength derivative of kappa|, m <= 2.

    Reads the precomputed series when the trajectory carries one;
    otherwise recomputes from the stored sample curves (needs ``w``).
    """
    if m not in (0, 1, 2):
        raise InvalidParams("derivative order m must be 0, 1 or 2")
    trends = getattr(traj, "trends", None)
    if trends is not None and m in trends:
        return np.asarray(trends[m], dtype=float)
    if w is None:
        raise InvalidParams("pass w to recompute trends from sample curves")
    out = []
    for cur in traj.sample_curves:
        g = build_geometry(cur, w)
        f = g.kappa
        if m == 1:
            f = _k.d1_cyclic(f, g.ds)
        elif m == 2:
            f = _k.d2_cyclic(f, g.ds)
        out.append(float(np.max(np.abs(f))))
    return np.array(out)


__all__ = [
    "DiagnosticsRecord",
    "CSV_HEADER",
    "Lemma32Result",
    "sample_record",
    "geometry_from_arrays",
    "length_decay_residual",
    "fill_length_decay",
    "theta_pde_residual",
    "v_pde_residual",
    "kappa_sq_pde_residual",
    "window_residuals",
    "lemma32_check",
    "require_lemma32",
    "comparison_check",
    "derivative_trend",
]
