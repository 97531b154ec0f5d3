"""Compiled numerical core.

Everything here is numba-jitted and operates on plain float64 arrays so the
time-stepping loop stays off the interpreter. Warp families are dispatched on
an integer code; ``params`` is a flat float64 vector whose layout is fixed by
the family (see ``warp.py``). The extended family stores its base family
inline: ``params = [a0, base_code, *base_params]``.

Sign conventions (shared with the rest of the package): the unit tangent has
frame components a = r * dtheta/ds, b = dz/ds; the normal is (-b, a); the
curvature kappa = (b * d_s a - a * d_s b) + (r'/r) * a is normalised so that a
horizontal circle has kappa = r'/r and sinks under the flow.
"""

import numpy as np
from numba import njit

# warp family codes
EXPONENTIAL = 0
RECIPROCAL = 1
SHIFTED_RECIPROCAL = 2
CONSTANT = 3
EVEN_BOWL = 4
EXTENDED = 5

# terminal event codes returned by advance()
EV_NONE = 0
EV_DOMAIN = 1
EV_COLLAPSE = 2
EV_BLOWUP = 3
EV_FLOOR = 4
EV_DEGENERATE = 5


@njit(cache=True)
def _factorial(k):
    out = 1.0
    for i in range(2, k + 1):
        out *= i
    return out


@njit(cache=True)
def _recip_deriv(z, order):
    # d^k/dz^k of -1/z
    return -((-1.0) ** order) * _factorial(order) * z ** (-1.0 - order)


@njit(cache=True)
def _glue_deriv(u, order):
    """d^k/du^k of u^2 * exp(1/u) for u < 0.

    Orders 0..3 are closed forms; higher orders use the Laurent recurrence
    d/du (u^p E) = p u^(p-1) E - u^(p-2) E with E = exp(1/u).
    """
    e = np.exp(1.0 / u)
    if e == 0.0:
        return 0.0
    if order == 0:
        return u * u * e
    if order == 1:
        return (2.0 * u - 1.0) * e
    if order == 2:
        return (2.0 - 2.0 / u + 1.0 / (u * u)) * e
    if order == 3:
        return -e / (u * u * u * u)
    m = 2 * order + 1
    coef = np.zeros(m)
    coef[0] = 1.0  # index j holds the coefficient of u^(2-j)
    for _ in range(order):
        nxt = np.zeros(m)
        for j in range(m):
            c = coef[j]
            if c == 0.0:
                continue
            p = 2 - j
            if p != 0 and j + 1 < m:
                nxt[j + 1] += c * p
            if j + 2 < m:
                nxt[j + 2] -= c
        coef = nxt
    s = 0.0
    for j in range(m):
        if coef[j] != 0.0:
            s += coef[j] * u ** (2.0 - j)
    return s * e


@njit(cache=True)
def _eval_base(code, params, z, order):
    if code == EXPONENTIAL:
        c = params[0]
        return c ** order * np.exp(c * z)
    elif code == RECIPROCAL:
        return _recip_deriv(z, order)
    elif code == SHIFTED_RECIPROCAL:
        v = _recip_deriv(z, order)
        if order == 0:
            v += params[0]
        return v
    elif code == CONSTANT:
        return params[0] if order == 0 else 0.0
    elif code == EVEN_BOWL:
        r0 = params[0]
        q = params[1]
        if order == 0:
            return r0 + q * z * z
        elif order == 1:
            return 2.0 * q * z
        elif order == 2:
            return 2.0 * q
        return 0.0
    return np.nan


@njit(cache=True)
def eval_scalar(code, params, z, order):
    if code == EXTENDED:
        a0 = params[0]
        bcode = int(params[1])
        v = _eval_base(bcode, params[2:], z, order)
        if z < a0:
            v += _glue_deriv(z - a0, order)
        return v
    return _eval_base(code, params, z, order)


@njit(cache=True)
def eval_array(code, params, zs, order):
    out = np.empty(zs.shape[0])
    for i in range(zs.shape[0]):
        out[i] = eval_scalar(code, params, zs[i], order)
    return out


# ---------------------------------------------------------------------------
# nonuniform three-point stencils on the cyclic arclength grid
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _d1(hm, hp, fm, f0, fp):
    return (hm * hm * fp - hp * hp * fm + (hp * hp - hm * hm) * f0) / (
        hm * hp * (hm + hp)
    )


@njit(cache=True, inline="always")
def _d2(hm, hp, fm, f0, fp):
    return 2.0 * (hm * fp + hp * fm - (hm + hp) * f0) / (hm * hp * (hm + hp))


@njit(cache=True)
def d1_cyclic(f, ds):
    """First arclength derivative of a plain periodic vertex field."""
    n = f.shape[0]
    out = np.empty(n)
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        ip = i + 1 if i + 1 < n else 0
        out[i] = _d1(ds[im], ds[i], f[im], f[i], f[ip])
    return out


@njit(cache=True)
def d2_cyclic(f, ds):
    """Second arclength derivative of a plain periodic vertex field."""
    n = f.shape[0]
    out = np.empty(n)
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        ip = i + 1 if i + 1 < n else 0
        out[i] = _d2(ds[im], ds[i], f[im], f[i], f[ip])
    return out


# ---------------------------------------------------------------------------
# discrete geometry
# ---------------------------------------------------------------------------


@njit(cache=True)
def geometry(theta, z, coff, code, params):
    """Edge lengths, tangent frame, curvature, length and r at vertices.

    theta must be the lifted angle: the vertex after i = n-1 is
    (theta[0] + coff, z[0]). Edge lengths use the metric midpoint rule
    ds_i = sqrt(r(zbar)^2 dtheta^2 + dz^2).
    """
    n = theta.shape[0]
    ds = np.empty(n)
    L = 0.0
    for i in range(n):
        if i + 1 < n:
            dth = theta[i + 1] - theta[i]
            dz = z[i + 1] - z[i]
            zm = 0.5 * (z[i + 1] + z[i])
        else:
            dth = theta[0] + coff - theta[i]
            dz = z[0] - z[i]
            zm = 0.5 * (z[0] + z[i])
        rm = eval_scalar(code, params, zm, 0)
        ds[i] = np.sqrt((rm * dth) ** 2 + dz * dz)
        L += ds[i]

    a = np.empty(n)
    b = np.empty(n)
    rv = np.empty(n)
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        ip = i + 1 if i + 1 < n else 0
        hm = ds[im]
        hp = ds[i]
        thm = theta[im] - (coff if i == 0 else 0.0)
        thp = theta[ip] + (coff if i == n - 1 else 0.0)
        dth_ds = _d1(hm, hp, thm, theta[i], thp)
        dz_ds = _d1(hm, hp, z[im], z[i], z[ip])
        r = eval_scalar(code, params, z[i], 0)
        rv[i] = r
        ar = r * dth_ds
        br = dz_ds
        nrm = np.sqrt(ar * ar + br * br)
        a[i] = ar / nrm
        b[i] = br / nrm

    kap = np.empty(n)
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        ip = i + 1 if i + 1 < n else 0
        hm = ds[im]
        hp = ds[i]
        da = _d1(hm, hp, a[im], a[i], a[ip])
        db = _d1(hm, hp, b[im], b[i], b[ip])
        r1 = eval_scalar(code, params, z[i], 1)
        kap[i] = b[i] * da - a[i] * db + (r1 / rv[i]) * a[i]
    return ds, a, b, kap, L, rv


@njit(cache=True)
def rk2_step(theta, z, coff, code, params, dt):
    """One explicit midpoint step of dtheta/dt = kappa b / r, dz/dt = -kappa a."""
    n = theta.shape[0]
    ds, a, b, kap, L, rv = geometry(theta, z, coff, code, params)
    th_mid = np.empty(n)
    z_mid = np.empty(n)
    for i in range(n):
        th_mid[i] = theta[i] + 0.5 * dt * kap[i] * b[i] / rv[i]
        z_mid[i] = z[i] - 0.5 * dt * kap[i] * a[i]
    ds2, a2, b2, kap2, L2, rv2 = geometry(th_mid, z_mid, coff, code, params)
    th_new = np.empty(n)
    z_new = np.empty(n)
    for i in range(n):
        th_new[i] = theta[i] + dt * kap2[i] * b2[i] / rv2[i]
        z_new[i] = z[i] - dt * kap2[i] * a2[i]
    return th_new, z_new


@njit(cache=True, inline="always")
def _lagr4(x0, x1, x2, x3, f0, f1, f2, f3, x):
    l0 = ((x - x1) * (x - x2) * (x - x3)) / ((x0 - x1) * (x0 - x2) * (x0 - x3))
    l1 = ((x - x0) * (x - x2) * (x - x3)) / ((x1 - x0) * (x1 - x2) * (x1 - x3))
    l2 = ((x - x0) * (x - x1) * (x - x3)) / ((x2 - x0) * (x2 - x1) * (x2 - x3))
    l3 = ((x - x0) * (x - x1) * (x - x2)) / ((x3 - x0) * (x3 - x1) * (x3 - x2))
    return l0 * f0 + l1 * f1 + l2 * f2 + l3 * f3


@njit(cache=True)
def remesh_uniform(theta, z, coff, code, params, target_n):
    """Resample to equal metric arclength, anchored at vertex 0.

    Coordinates are interpolated in cumulative arclength by a cyclic
    4-point Lagrange cubic (theta lifted by the winding offset across the
    seam). Cubic rather than linear: second differences of the resampled
    curve must stay consistent, and linear resampling both leaves O(1)
    kinks in them and systematically shortens the polygon, which biases
    dL/dt measurements.
    """
    n = theta.shape[0]
    ds = np.empty(n)
    cum = np.empty(n + 1)
    cum[0] = 0.0
    for i in range(n):
        if i + 1 < n:
            dth = theta[i + 1] - theta[i]
            dz = z[i + 1] - z[i]
            zm = 0.5 * (z[i + 1] + z[i])
        else:
            dth = theta[0] + coff - theta[i]
            dz = z[0] - z[i]
            zm = 0.5 * (z[0] + z[i])
        rm = eval_scalar(code, params, zm, 0)
        ds[i] = np.sqrt((rm * dth) ** 2 + dz * dz)
        cum[i + 1] = cum[i] + ds[i]
    L = cum[n]
    th_new = np.empty(target_n)
    z_new = np.empty(target_n)
    th_new[0] = theta[0]
    z_new[0] = z[0]
    k = 0
    xs = np.empty(4)
    fth = np.empty(4)
    fz = np.empty(4)
    for j in range(1, target_n):
        sj = L * j / target_n
        while k + 1 < n and cum[k + 1] < sj:
            k += 1
        for m in range(4):
            idx = k - 1 + m
            w = idx // n
            ii = idx - w * n
            xs[m] = cum[ii] + w * L
            fth[m] = theta[ii] + w * coff
            fz[m] = z[ii]
        th_new[j] = _lagr4(
            xs[0], xs[1], xs[2], xs[3], fth[0], fth[1], fth[2], fth[3], sj
        )
        z_new[j] = _lagr4(
            xs[0], xs[1], xs[2], xs[3], fz[0], fz[1], fz[2], fz[3], sj
        )
    return th_new, z_new


@njit(cache=True)
def advance(
    theta,
    z,
    coff,
    code,
    params,
    t,
    t_target,
    cfl,
    L0,
    collapse_frac,
    since_remesh,
    remesh_every,
    ratio_trigger,
    z_floor,
    domain_upper,
):
    """Integrate the flow from t to t_target, remeshing on schedule.

    Stops early with an event code when the state violates a guard; the
    offending state is returned unmodified so the caller can inspect it.
    The final step is clipped so t lands exactly on t_target.
    """
    event = EV_NONE
    steps = 0
    while t < t_target:
        ds, a, b, kap, L, rv = geometry(theta, z, coff, code, params)
        if not np.isfinite(L):
            event = EV_DEGENERATE
            break
        n = theta.shape[0]
        mn = ds[0]
        mx = ds[0]
        zmin = z[0]
        zmax = z[0]
        kmax = 0.0
        for i in range(n):
            if ds[i] < mn:
                mn = ds[i]
            if ds[i] > mx:
                mx = ds[i]
            if z[i] < zmin:
                zmin = z[i]
            if z[i] > zmax:
                zmax = z[i]
            ak = abs(kap[i])
            if ak > kmax:
                kmax = ak
        if zmax >= domain_upper:
            event = EV_DOMAIN
            break
        if zmin <= z_floor:
            event = EV_FLOOR
            break
        if L < collapse_frac * L0:
            event = EV_COLLAPSE
            break
        if kmax * mn > 1.0:
            event = EV_BLOWUP
            break
        if mn <= 0.0:
            event = EV_DEGENERATE
            break

        dt_raw = cfl * mn * mn
        if t_target - t <= dt_raw:
            dt = t_target - t
            t_next = t_target
        else:
            dt = dt_raw
            t_next = t + dt

        th_mid = np.empty(n)
        z_mid = np.empty(n)
        for i in range(n):
            th_mid[i] = theta[i] + 0.5 * dt * kap[i] * b[i] / rv[i]
            z_mid[i] = z[i] - 0.5 * dt * kap[i] * a[i]
        ds2, a2, b2, kap2, L2, rv2 = geometry(th_mid, z_mid, coff, code, params)
        th_new = np.empty(n)
        z_new = np.empty(n)
        for i in range(n):
            th_new[i] = theta[i] + dt * kap2[i] * b2[i] / rv2[i]
            z_new[i] = z[i] - dt * kap2[i] * a2[i]
        theta = th_new
        z = z_new
        t = t_next
        steps += 1
        since_remesh += 1

        if since_remesh >= remesh_every or mx / mn > ratio_trigger:
            theta, z = remesh_uniform(theta, z, coff, code, params, n)
            since_remesh = 0
    return theta, z, t, since_remesh, event, steps
