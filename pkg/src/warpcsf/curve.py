"""Discrete closed curves on the warped cylinder.

A curve is a cyclic vertex list (theta_i, z_i) with the angle stored lifted
(not reduced mod 2*pi): the vertex after i = n-1 is (theta_0 + closure_offset,
z_0), and closure_offset = 2*pi*w encodes the winding number w exactly. The
orientation is canonical: curves with w != 0 are stored with w > 0, so a graph
over theta has tangent frame component a = r * dtheta/ds > 0 everywhere.

Geometry is built with the metric midpoint rule for edge lengths and
nonuniform three-point stencils on cumulative arclength for the frame (a, b)
and the curvature kappa = (b d_s a - a d_s b) + (r'/r) a.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .errors import DegenerateEdge, DomainExceeded, InvalidParams, NotClosed

TWO_PI = 2.0 * math.pi
WINDING_TOL = 1e-6
MIN_VERTICES = 8
DEGENERATE_FRAC = 1e-12


class DiscreteCurve:
    """Cyclic polyline (theta_i, z_i) with lifted angles and fixed winding."""

    __slots__ = ("theta", "z", "closure_offset")

    def __init__(self, theta, z, closure_offset):
        theta = np.array(theta, dtype=np.float64)
        z = np.array(z, dtype=np.float64)
        if theta.ndim != 1 or theta.shape != z.shape:
            raise InvalidParams("theta and z must be 1-d arrays of equal length")
        if theta.shape[0] < MIN_VERTICES:
            raise InvalidParams(f"need at least {MIN_VERTICES} vertices")
        closure_offset = float(closure_offset)
        wr = closure_offset / TWO_PI
        if abs(wr - round(wr)) >= WINDING_TOL:
            raise NotClosed(
                f"closure offset {closure_offset} is not a multiple of 2*pi"
            )
        if round(wr) < 0:  # canonical orientation: positive winding
            theta = theta[::-1].copy()
            z = z[::-1].copy()
            closure_offset = -closure_offset
        dth = np.diff(theta, append=theta[0] + closure_offset)
        dz = np.diff(z, append=z[0])
        if np.any((dth == 0.0) & (dz == 0.0)):
            raise InvalidParams("consecutive vertices must be distinct")
        self.theta = theta
        self.z = z
        self.closure_offset = closure_offset

    @classmethod
    def _unsafe(cls, theta, z, closure_offset):
        """Fast path for internally produced, known-valid states."""
        obj = cls.__new__(cls)
        obj.theta = theta
        obj.z = z
        obj.closure_offset = float(closure_offset)
        return obj

    @property
    def n(self):
        return self.theta.shape[0]

    def winding_number(self):
        wr = self.closure_offset / TWO_PI
        w = round(wr)
        if abs(wr - w) >= WINDING_TOL:
            raise NotClosed(
                f"closure offset {self.closure_offset} is not a multiple of 2*pi"
            )
        return int(w)

    def __repr__(self):
        return (
            f"DiscreteCurve(n={self.n}, w={round(self.closure_offset / TWO_PI)}, "
            f"z in [{self.z.min():.4g}, {self.z.max():.4g}])"
        )


@dataclass
class CurveGeometry:
    """Per-edge lengths and per-vertex frame/curvature of one curve."""

    ds: np.ndarray  # ds[i] is the edge from vertex i to i+1
    a: np.ndarray  # <tangent, E_theta>; this is the graph quantity Theta
    b: np.ndarray  # <tangent, d_z> = dz/ds
    kappa: np.ndarray
    length: float
    r: np.ndarray  # warp evaluated at the vertices

    @property
    def theta_fn(self):
        """Alias: the angle function Theta_i is the stored a_i."""
        return self.a

    @property
    def vertex_weights(self):
        """Trapezoid weights (ds_{i-1} + ds_i)/2 for vertex-centered integrals."""
        return 0.5 * (self.ds + np.roll(self.ds, 1))

    def integrate(self, field):
        """Closed-curve integral of a vertex field against arclength."""
        return float(np.sum(field * self.vertex_weights))


def build_geometry(curve, w):
    """Geometry of ``curve`` under warp ``w``.

    Raises DomainExceeded if a vertex sits at or above the domain bound and
    DegenerateEdge when an edge is shorter than 1e-12 * L / n.
    """
    if np.max(curve.z) >= w.domain_upper:
        raise DomainExceeded(
            f"curve reaches z = {curve.z.max()} >= {w.domain_upper}"
        )
    code, params = w.kernel_args
    ds, a, b, kap, L, rv = _k.geometry(
        curve.theta, curve.z, curve.closure_offset, code, params
    )
    if not np.isfinite(L) or np.min(ds) < DEGENERATE_FRAC * L / curve.n:
        raise DegenerateEdge(
            f"shortest edge {np.min(ds):.3e} below {DEGENERATE_FRAC:.0e} * L/n"
        )
    return CurveGeometry(ds=ds, a=a, b=b, kappa=kap, length=float(L), r=rv)


def is_graph(curve, w, geometry=None):
    """(is the curve a graph over theta, min Theta)."""
    g = geometry if geometry is not None else build_geometry(curve, w)
    m = float(np.min(g.a))
    return m > 0.0, m


def remesh(curve, w, target_n):
    """Resample to ``target_n`` vertices at equal metric arclength.

    Vertex 0 anchors the parametrization; winding is preserved exactly. A
    curve that is already uniform is reproduced up to roundoff.
    """
    if target_n < MIN_VERTICES:
        raise InvalidParams(f"target_n must be >= {MIN_VERTICES}")
    build_geometry(curve, w)  # validates domain and nondegeneracy
    code, params = w.kernel_args
    th, z = _k.remesh_uniform(
        curve.theta, curve.z, curve.closure_offset, code, params, int(target_n)
    )
    return DiscreteCurve._unsafe(th, z, curve.closure_offset)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def circle(z0, n=128, winding=1):
    """Horizontal circle at height z0, traversed ``winding`` times."""
    if winding == 0:
        raise InvalidParams("a circle needs winding != 0")
    if n < MIN_VERTICES:
        raise InvalidParams(f"n must be >= {MIN_VERTICES}")
    coff = TWO_PI * winding
    theta = coff * np.arange(n) / n
    z = np.full(n, float(z0))
    return DiscreteCurve(theta, z, coff)


def graph_sine(z0, amplitude=0.1, n=256):
    """Winding-1 graph z = z0 + amplitude * sin(theta).

    The default amplitude keeps the fastest initial transient resolvable
    at the default sampling cadence, so residual reports on an
    out-of-the-box run are meaningful rather than aliased.
    """
    if n < MIN_VERTICES:
        raise InvalidParams(f"n must be >= {MIN_VERTICES}")
    theta = TWO_PI * np.arange(n) / n
    z = z0 + amplitude * np.sin(theta)
    return DiscreteCurve(theta, z, TWO_PI)


def fold(z0, depth=1.0, width=0.5, n=512):
    """Embedded winding-1 curve with a tongue folding back in theta.

    The angle rate is 1 + mu * (gbar - g(u)) with g a Gaussian bump of width
    ``width`` centred at u = pi and mu fixed so the rate dips to -1 there:
    the tangent turns vertical and reverses, so min Theta < 0. The height
    z = z0 - (depth/2) sin(u - pi) is strictly decreasing across the whole
    fold window, which keeps the three sheets at distinct heights and the
    curve embedded.
    """
    if n < 64:
        raise InvalidParams("fold needs n >= 64 to resolve the tongue")
    if depth <= 0:
        raise InvalidParams("depth must be > 0")
    if not 0 < width <= 0.8:
        raise InvalidParams("width must lie in (0, 0.8]")
    u = TWO_PI * np.arange(n) / n
    s2 = width * math.sqrt(2.0)
    erf0 = math.erf(-math.pi / s2)
    big_g = np.array(
        [width * math.sqrt(math.pi / 2.0) * (math.erf((ui - math.pi) / s2) - erf0) for ui in u]
    )
    total = width * math.sqrt(math.pi / 2.0) * (math.erf(math.pi / s2) - erf0)
    gbar = total / TWO_PI
    mu = 2.0 / (1.0 - gbar)
    theta = u + mu * (gbar * u - big_g)
    z = z0 - 0.5 * depth * np.sin(u - math.pi)
    return DiscreteCurve(theta, z, TWO_PI)


def contractible(z0, rho=0.5, n=128):
    """Winding-0 loop of coordinate radius rho around (0, z0)."""
    if rho <= 0:
        raise InvalidParams("rho must be > 0")
    if n < MIN_VERTICES:
        raise InvalidParams(f"n must be >= {MIN_VERTICES}")
    u = TWO_PI * np.arange(n) / n
    theta = rho * np.cos(u)
    z = z0 + rho * np.sin(u)
    return DiscreteCurve(theta, z, 0.0)


PRESETS = {
    "circle": (circle, ("z0", "n", "winding")),
    "graph_sine": (graph_sine, ("z0", "amplitude", "n")),
    "fold": (fold, ("z0", "depth", "width", "n")),
    "contractible": (contractible, ("z0", "rho", "n")),
}


def make_preset(name, **params):
    if name not in PRESETS:
        raise InvalidParams(f"unknown preset {name!r}")
    func, _ = PRESETS[name]
    return func(**params)
