"""Warping functions r : (-inf, a) -> (0, inf) for the product cylinder.

The metric is r(z)^2 dtheta^2 + dz^2. A family is chosen by name; every
family evaluates closed-form derivatives up to ``max_analytic_order``. The
quantities that control the flow are the log-derivative r'/r (the geodesic
curvature of a horizontal circle) and the Gauss curvature -r''/r.

``check_conditions`` grades a warp against the standing hypotheses used by
the long-time results:

* c0: r' > 0 with finite sup r'/r (= C) and sup |r''/r| (= D),
* c1: r'/r -> 0 as z -> -inf (checked by a grid proxy),
* c2: not a property of r alone; the report carries the induced length
  bound 1/(2 C^2) that an initial curve has to beat,
* c3: r r'' - 2 r'^2 >= 0,
* c4: sup |r^(i)/r| finite for each derivative order i checked.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from .errors import DomainExceeded, InvalidParams, OrderUnavailable

_FAMILY_CODES = {
    "exponential": _k.EXPONENTIAL,
    "reciprocal": _k.RECIPROCAL,
    "shifted_reciprocal": _k.SHIFTED_RECIPROCAL,
    "constant": _k.CONSTANT,
    "even_bowl": _k.EVEN_BOWL,
    "extended": _k.EXTENDED,
}

FAMILY_NAMES = tuple(_FAMILY_CODES)

# families whose sup r'/r and sup |r''/r| have closed forms on (-inf, a)
_ANALYTIC_SUP_FAMILIES = ("exponential", "reciprocal", "shifted_reciprocal", "constant")

_C1_TOL = 1e-3
_DEFAULT_MAX_ORDER = 16


class WarpingFunction:
    """One member of a warp family, pinned to a domain (-inf, domain_upper)."""

    def __init__(self, family, params, domain_upper, max_analytic_order=_DEFAULT_MAX_ORDER):
        if family not in _FAMILY_CODES:
            raise InvalidParams(f"unknown warp family {family!r}")
        if not np.isfinite(domain_upper):
            raise InvalidParams("domain_upper must be finite")
        if max_analytic_order < 2:
            raise InvalidParams("max_analytic_order must be >= 2")
        self.family = family
        self.params = tuple(float(p) for p in params)
        self.domain_upper = float(domain_upper)
        self.max_analytic_order = int(max_analytic_order)
        self._code = _FAMILY_CODES[family]
        self._kparams = np.asarray(self.params, dtype=np.float64)
        self._validate()

    # -- constructors -------------------------------------------------------

    @classmethod
    def exponential(cls, c, domain_upper=0.0):
        """r(z) = exp(c z), c > 0. Constant log-derivative c."""
        return cls("exponential", (c,), domain_upper)

    @classmethod
    def reciprocal(cls, domain_upper=-1.0):
        """r(z) = -1/z on (-inf, a) with a < 0."""
        return cls("reciprocal", (), domain_upper)

    @classmethod
    def shifted_reciprocal(cls, c0, domain_upper=-1.0):
        """r(z) = c0 - 1/z with c0 > 0, on (-inf, a) with a < 0."""
        return cls("shifted_reciprocal", (c0,), domain_upper)

    @classmethod
    def constant(cls, r0=1.0, domain_upper=0.0):
        """Flat cylinder of radius r0."""
        return cls("constant", (r0,), domain_upper)

    @classmethod
    def even_bowl(cls, r0=0.5, q=1.0 / 36.0, domain_upper=6.0):
        """r(z) = r0 + q z^2: even, minimal circle at z = 0, r' < 0 below it."""
        return cls("even_bowl", (r0, q), domain_upper)

    def _validate(self):
        f, p = self.family, self.params
        if f == "exponential":
            if len(p) != 1 or p[0] <= 0:
                raise InvalidParams("exponential needs a single rate c > 0")
        elif f == "reciprocal":
            if len(p) != 0:
                raise InvalidParams("reciprocal takes no parameters")
            if self.domain_upper >= 0:
                raise InvalidParams("reciprocal needs domain_upper < 0")
        elif f == "shifted_reciprocal":
            if len(p) != 1 or p[0] <= 0:
                raise InvalidParams("shifted_reciprocal needs a single shift c0 > 0")
            if self.domain_upper >= 0:
                raise InvalidParams("shifted_reciprocal needs domain_upper < 0")
        elif f == "constant":
            if len(p) != 1 or p[0] <= 0:
                raise InvalidParams("constant needs a single radius r0 > 0")
        elif f == "even_bowl":
            if len(p) != 2 or p[0] <= 0 or p[1] <= 0:
                raise InvalidParams("even_bowl needs r0 > 0 and q > 0")
        elif f == "extended":
            if len(p) < 2:
                raise InvalidParams("extended params must be (a0, base_code, ...)")
            if p[0] >= self.domain_upper:
                raise InvalidParams("gluing height a0 must lie below domain_upper")

    # -- evaluation ---------------------------------------------------------

    @property
    def kernel_args(self):
        """(family code, packed params) as consumed by the compiled kernels."""
        return self._code, self._kparams

    def eval(self, z, order=0):
        """d^order r / dz^order at z (scalar or array), closed form.

        Raises DomainExceeded if any z >= domain_upper and OrderUnavailable
        beyond max_analytic_order.
        """
        if order < 0:
            raise InvalidParams("derivative order must be >= 0")
        if order > self.max_analytic_order:
            raise OrderUnavailable(
                f"order {order} exceeds max_analytic_order={self.max_analytic_order}"
            )
        zs = np.asarray(z, dtype=np.float64)
        if np.any(zs >= self.domain_upper):
            raise DomainExceeded(
                f"height {np.max(zs)} outside (-inf, {self.domain_upper})"
            )
        out = _k.eval_array(self._code, self._kparams, np.atleast_1d(zs).ravel(), order)
        if zs.ndim == 0:
            return float(out[0])
        return out.reshape(zs.shape)

    def __call__(self, z):
        return self.eval(z, 0)

    def log_derivative(self, z):
        """r'(z)/r(z), the geodesic curvature of the horizontal circle at z."""
        return self.eval(z, 1) / self.eval(z, 0)

    def gauss_curvature(self, z):
        """-r''(z)/r(z)."""
        return -self.eval(z, 2) / self.eval(z, 0)

    # -- extension ----------------------------------------------------------

    def extend_convex_at_infinity(self, a0):
        """Replace r below a0 by r(z) + (z - a0)^2 exp(1/(z - a0)).

        The glue term and all its derivatives vanish as z -> a0-, so values
        on [a0, domain_upper) agree with the base warp exactly; far below a0
        the quadratic growth forces r' < 0.
        """
        if self.family == "extended":
            raise InvalidParams("warp is already extended")
        if a0 >= self.domain_upper:
            raise DomainExceeded("the cut must lie strictly below domain_upper")
        params = (float(a0), float(self._code)) + self.params
        w = WarpingFunction.__new__(WarpingFunction)
        w.family = "extended"
        w.params = params
        w.domain_upper = self.domain_upper
        w.max_analytic_order = self.max_analytic_order
        w._code = _FAMILY_CODES["extended"]
        w._kparams = np.asarray(params, dtype=np.float64)
        w.base_family = self.family
        return w

    @property
    def config_dict(self):
        """Flat key/value form used by scenario configs."""
        d = {"family": self.family, "domain_upper": self.domain_upper}
        if self.family == "exponential":
            d["c"] = self.params[0]
        elif self.family == "shifted_reciprocal":
            d["c0"] = self.params[0]
        elif self.family == "constant":
            d["r0"] = self.params[0]
        elif self.family == "even_bowl":
            d["r0"], d["q"] = self.params
        elif self.family == "extended":
            d["extend_below"] = self.params[0]
            base_code = int(self.params[1])
            base_name = next(k for k, v in _FAMILY_CODES.items() if v == base_code)
            d["base_family"] = base_name
            base = WarpingFunction(base_name, self.params[2:], self.domain_upper)
            for key, val in base.config_dict.items():
                if key not in ("family", "domain_upper"):
                    d[key] = val
        return d

    def __repr__(self):
        ps = ", ".join(f"{p:g}" for p in self.params)
        return f"WarpingFunction({self.family}[{ps}], z < {self.domain_upper:g})"

    def __eq__(self, other):
        return (
            isinstance(other, WarpingFunction)
            and self.family == other.family
            and self.params == other.params
            and self.domain_upper == other.domain_upper
        )

    def __hash__(self):
        return hash((self.family, self.params, self.domain_upper))


@dataclass(frozen=True)
class ConditionGrid:
    """Geometric sampling grid z = a - offset, offsets log-spaced."""

    eps: float = 1e-3
    depth: float = 1e6
    count: int = 601

    def heights(self, domain_upper):
        offs = np.geomspace(self.eps, self.depth, self.count)
        return domain_upper - offs  # descending: index -1 is the deepest point


@dataclass
class ConditionReport:
    """Verdicts, sup constants and witness points for one warp."""

    c0: bool
    c1: bool
    c3: bool
    c4: bool
    C: float
    D: float
    c2_bound: float | None
    c_estimated: bool
    d_estimated: bool
    witnesses: dict = field(default_factory=dict)
    notes: tuple = ()

    def to_json_dict(self):
        return {
            "c0": self.c0,
            "c1": self.c1,
            "c2_bound": self.c2_bound,
            "c3": self.c3,
            "c4": self.c4,
            "C": self.C,
            "D": self.D,
            "estimates": {"C": self.c_estimated, "D": self.d_estimated},
            "witnesses": self.witnesses,
            "notes": list(self.notes),
        }


def _closed_form_sups(w):
    """Exact C = sup r'/r and D = sup |r''/r| where the family allows it."""
    a = w.domain_upper
    if w.family == "exponential":
        c = w.params[0]
        return c, c * c
    if w.family == "reciprocal":
        return -1.0 / a, 2.0 / (a * a)
    if w.family == "shifted_reciprocal":
        c0 = w.params[0]
        return 1.0 / (c0 * a * a - a), 2.0 / (c0 * abs(a) ** 3 + a * a)
    if w.family == "constant":
        return 0.0, 0.0
    return None


def check_conditions(w, grid=None):
    """Grade ``w`` against c0..c4 on a sampling grid.

    Sup constants are closed-form where the family allows; otherwise they are
    grid maxima and flagged as lower-bound estimates.
    """
    if grid is None:
        grid = ConditionGrid()
    witnesses = {}
    notes = []
    zs = grid.heights(w.domain_upper)
    r0 = w.eval(zs, 0)
    # keep only heights where r is representable: far below, families like
    # exponential underflow float64 and every ratio turns into 0/0 noise
    usable = np.isfinite(r0) & (r0 > 1e-280)
    if not np.all(usable):
        zs = zs[usable]
        r0 = r0[usable]
        notes.append(
            "grid truncated at z = "
            f"{zs[-1]:.6g} where r falls below float64 range"
        )
    r1 = w.eval(zs, 1)
    r2 = w.eval(zs, 2)
    logd = r1 / r0

    # c0: monotonicity r' > 0 everywhere sampled
    bad = np.where(r1 <= 0.0)[0]
    c0 = bad.size == 0
    if c0:
        i = int(np.argmax(logd))
        witnesses["c0"] = {"z": float(zs[i]), "value": float(r1[i])}
    else:
        i = int(bad[np.argmin(r1[bad])])
        witnesses["c0"] = {"z": float(zs[i]), "value": float(r1[i])}
        if w.family == "even_bowl":
            notes.append(
                "r' vanishes at z = 0 and is negative below it; the horizontal "
                "circle at the waist is a geodesic"
            )
        if w.family == "extended":
            notes.append("extension forces r' < 0 deep below the gluing height")

    # sup constants
    closed = _closed_form_sups(w)
    if closed is not None:
        C, D = closed
        c_est = d_est = False
        witnesses["C"] = {"z": float(w.domain_upper), "value": float(C)}
        witnesses["D"] = {"z": float(w.domain_upper), "value": float(D)}
        if w.family == "exponential":
            # constant ratios: any height witnesses them
            witnesses["C"]["z"] = float(zs[0])
            witnesses["D"]["z"] = float(zs[0])
    else:
        iC = int(np.argmax(logd))
        curv = np.abs(r2 / r0)
        iD = int(np.argmax(curv))
        C = float(logd[iC])
        D = float(curv[iD])
        c_est = d_est = True
        witnesses["C"] = {"z": float(zs[iC]), "value": C}
        witnesses["D"] = {"z": float(zs[iD]), "value": D}
        notes.append("C and D are grid maxima: estimates (lower bounds)")

    c2_bound = 1.0 / (2.0 * C * C) if C > 0 else None

    # c1 proxy: |r'/r| small at the deepest point and non-increasing over the
    # deepest decade of offsets
    absld = np.abs(logd)
    deep = absld[-1] < _C1_TOL
    offs = w.domain_upper - zs
    decade = offs >= offs[-1] / 10.0
    tail = absld[decade]
    monotone = bool(np.all(np.diff(tail) <= 1e-12 * (1.0 + tail[:-1])))
    c1 = bool(deep and monotone)
    witnesses["c1"] = {"z": float(zs[-1]), "value": float(logd[-1])}

    # c3: r r'' - 2 r'^2 >= 0
    gap = r0 * r2 - 2.0 * r1 * r1
    if w.family in ("reciprocal", "shifted_reciprocal", "constant"):
        c3 = True
        i = int(np.argmin(gap))
        witnesses["c3"] = {"z": float(zs[i]), "value": float(gap[i])}
    elif w.family == "exponential":
        c3 = False
        i = int(np.argmin(gap))
        witnesses["c3"] = {"z": float(zs[i]), "value": float(gap[i])}
    else:
        scale = 1.0 + np.abs(r0 * r2) + 2.0 * r1 * r1
        ok = gap >= -1e-12 * scale
        c3 = bool(np.all(ok))
        i = int(np.argmin(gap / scale))
        witnesses["c3"] = {"z": float(zs[i]), "value": float(gap[i])}

    # c4: each derivative ratio bounded on the grid (orders 1..4)
    c4 = True
    worst = (0.0, float(zs[0]), 1)
    for order in range(1, min(4, w.max_analytic_order) + 1):
        ratio = np.abs(w.eval(zs, order) / r0)
        if not np.all(np.isfinite(ratio)):
            c4 = False
            j = int(np.argmax(~np.isfinite(ratio)))
            worst = (float("inf"), float(zs[j]), order)
            break
        j = int(np.argmax(ratio))
        if ratio[j] >= worst[0]:
            worst = (float(ratio[j]), float(zs[j]), order)
    witnesses["c4"] = {"z": worst[1], "value": worst[0], "order": worst[2]}

    return ConditionReport(
        c0=bool(c0),
        c1=c1,
        c3=bool(c3),
        c4=bool(c4),
        C=float(C),
        D=float(D),
        c2_bound=c2_bound,
        c_estimated=c_est,
        d_estimated=d_est,
        witnesses=witnesses,
        notes=tuple(notes),
    )
