"""Reduced dynamics of horizontal circles: dz/dt = -r'(z)/r(z).

Classic fourth-order Runge-Kutta with step doubling: each step is taken once
at h and twice at h/2; the Richardson difference drives the step-size control
and supplies a fifth-order correction. Used for oracle comparisons and for
the barrier circles of the comparison principle, so the tolerance is tight.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as _k
from .errors import DomainExceeded, InvalidParams

_RTOL = 1e-11
_ATOL = 1e-13
_SAFETY = 0.9
_MIN_SHRINK = 0.2
_MAX_GROW = 5.0


def _rhs(code, params, z):
    return -_k.eval_scalar(code, params, z, 1) / _k.eval_scalar(code, params, z, 0)


def _rk4(code, params, z, h):
    k1 = _rhs(code, params, z)
    k2 = _rhs(code, params, z + 0.5 * h * k1)
    k3 = _rhs(code, params, z + 0.5 * h * k2)
    k4 = _rhs(code, params, z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_circle_heights(w, z0, times):
    """Heights z(t) of the circle ODE at the given ascending times (t >= 0)."""
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.size == 0:
        raise InvalidParams("times must be a non-empty 1-d array")
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise InvalidParams("times must be ascending and non-negative")
    if z0 >= w.domain_upper:
        raise DomainExceeded(f"z0 = {z0} outside (-inf, {w.domain_upper})")
    code, params = w.kernel_args
    out = np.empty(times.size)
    t, z = 0.0, float(z0)
    h = 1e-3
    for j, tj in enumerate(times):
        while t < tj:
            h = min(h, tj - t)
            while True:
                full = _rk4(code, params, z, h)
                half = _rk4(code, params, z, 0.5 * h)
                half = _rk4(code, params, half, 0.5 * h)
                err = abs(half - full) / 15.0
                tol = _ATOL + _RTOL * abs(half)
                if err <= tol or h <= 1e-14:
                    t_new = t + h
                    z = half + (half - full) / 15.0
                    break
                h *= max(_MIN_SHRINK, _SAFETY * (tol / err) ** 0.2)
            t = t_new
            if z >= w.domain_upper:
                raise DomainExceeded(f"circle ODE reached z = {z} at t = {t}")
            if err > 0:
                h *= min(_MAX_GROW, _SAFETY * (tol / err) ** 0.2)
            else:
                h *= _MAX_GROW
        out[j] = z
    return out


def baseline_circle_ode(w, z0, t):
    """Height of the baseline circle started at z0 after time t."""
    return float(integrate_circle_heights(w, z0, np.array([float(t)]))[0])
