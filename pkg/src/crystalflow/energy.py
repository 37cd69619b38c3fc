"""Interfacial energy densities and their faceted counterparts.

Two coordinate systems coexist here.  In graph coordinates the energy is a
strictly convex function W of the slope u_x.  In angular coordinates it is a
positive function f of the normal angle theta of the interface, with the
dictionary

    theta(p) = atan2(1, -p)   in (0, pi),      p = -cot(theta),
    W(p) = f(theta(p)) * sqrt(1 + p^2).

The faceted (crystalline) approximation replaces W by the piecewise-linear
interpolant through its values at a finite set of admissible slopes.  All the
driving quantities of the flow are built from chords of that interpolant.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.spatial import ConvexHull, HalfspaceIntersection

from .errors import (
    GridError,
    InvalidProfile,
    NotAFacet,
    NotStrictlyStable,
    UnboundedWulffSet,
)

__all__ = [
    "SlopeGrid",
    "SmoothEnergy",
    "CrystallineEnergy",
    "AngularEnergy",
    "WulffPolygon",
    "GrowthReport",
    "quadratic_energy",
    "area_energy",
    "angular_from_fourier",
    "angular_to_cartesian",
    "theta_from_slope",
    "slope_from_theta",
    "build_slope_grid",
    "delta",
    "face_velocity",
    "total_energy",
    "w_tilde_prime",
    "wulff_polygon",
    "delta_tilde",
    "angular_face_velocity",
    "check_growth_conditions",
    "frank_diagram",
]


# ---------------------------------------------------------------------------
# slope grids


@dataclass(frozen=True)
class SlopeGrid:
    """Strictly increasing finite set of admissible slopes.

    The grid never stores its fineness; ``m`` is recomputed from the gaps so
    it cannot go stale if a grid is built from an explicit list.
    """

    slopes: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.slopes, dtype=float)
        if s.ndim != 1 or s.size < 2:
            raise GridError("slope grid needs at least two slopes")
        if not np.all(np.diff(s) > 0):
            raise GridError("slope grid must be strictly increasing")
        object.__setattr__(self, "slopes", s)

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.slopes)

    @property
    def m(self) -> float:
        """Fineness: the largest gap between adjacent admissible slopes."""
        return float(self.gaps.max())

    def __len__(self) -> int:
        return len(self.slopes)

    def index_of(self, s: float, tol: float = 1e-9) -> int:
        """Index of the grid slope equal to ``s`` within ``tol``."""
        i = int(np.argmin(np.abs(self.slopes - s)))
        if abs(self.slopes[i] - s) > tol:
            raise GridError(f"slope {s!r} is not on the grid")
        return i

    def floor_index(self, v: float) -> int:
        """Largest index whose slope is <= v.  Raises if v is below the grid."""
        i = bisect_right(self.slopes, v) - 1
        if i < 0:
            raise GridError(f"value {v!r} lies below the slope grid")
        return i

    def ceil_index(self, v: float) -> int:
        """Smallest index whose slope is >= v.  Raises if v is above the grid."""
        i = bisect_left(self.slopes, v)
        if i >= len(self.slopes):
            raise GridError(f"value {v!r} lies above the slope grid")
        return i


def build_slope_grid(lo: float, hi: float, m_target: float, mode: str = "uniform") -> SlopeGrid:
    """Uniform grid on [lo, hi] with gap <= m_target.

    The number of intervals is ceil((hi - lo) / m_target), so the gap divides
    the span exactly and is never larger than requested.
    """
    if mode != "uniform":
        raise GridError(f"unknown grid mode {mode!r}; pass explicit slopes to SlopeGrid instead")
    if not (hi > lo) or not (m_target > 0):
        raise GridError("need hi > lo and m_target > 0")
    n = max(1, math.ceil((hi - lo) / m_target - 1e-12))
    grid = SlopeGrid(np.linspace(lo, hi, n + 1))
    if grid.m > m_target * (1 + 1e-12):
        raise GridError("constructed grid exceeds the requested fineness")
    return grid


# ---------------------------------------------------------------------------
# smooth energies


@dataclass(frozen=True)
class SmoothEnergy:
    """Strictly convex C^3 energy density W(u_x) with explicit derivatives."""

    name: str
    eval: Callable[[float], float]
    d1: Callable[[float], float]
    d2: Callable[[float], float]
    d3: Callable[[float], float]
    slope_domain: tuple[float, float] = (-math.inf, math.inf)


def quadratic_energy() -> SmoothEnergy:
    """W(s) = s^2 / 2, the density whose flow is the linear heat equation."""
    return SmoothEnergy(
        name="quadratic",
        eval=lambda s: 0.5 * s * s,
        d1=lambda s: s,
        d2=lambda s: 1.0 + 0.0 * s,
        d3=lambda s: 0.0 * s,
    )


def area_energy() -> SmoothEnergy:
    """W(s) = sqrt(1 + s^2): isotropic surface area of the graph."""
    return SmoothEnergy(
        name="area",
        eval=lambda s: np.sqrt(1.0 + s * s),
        d1=lambda s: s / np.sqrt(1.0 + s * s),
        d2=lambda s: (1.0 + s * s) ** -1.5,
        d3=lambda s: -3.0 * s * (1.0 + s * s) ** -2.5,
    )


# ---------------------------------------------------------------------------
# faceted energies


@dataclass(frozen=True)
class CrystallineEnergy:
    """Piecewise linear interpolant of a convex W through grid slopes.

    ``corner_values[j] = W(slopes[j])``; chords between consecutive corners are
    cached because every face velocity is a difference of two of them.
    """

    grid: SlopeGrid
    corner_values: np.ndarray
    chords: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cv = np.asarray(self.corner_values, dtype=float)
        if cv.shape != self.grid.slopes.shape:
            raise GridError("corner_values must match the grid length")
        object.__setattr__(self, "corner_values", cv)
        ch = np.diff(cv) / np.diff(self.grid.slopes)
        object.__setattr__(self, "chords", ch)
        if not np.all(np.diff(ch) > 0):
            raise GridError("corner values are not strictly convex on the grid")

    @classmethod
    def from_smooth(cls, energy: SmoothEnergy, grid: SlopeGrid) -> "CrystallineEnergy":
        lo, hi = energy.slope_domain
        if grid.slopes[0] < lo or grid.slopes[-1] > hi:
            raise GridError("grid exceeds the energy's slope domain")
        return cls(grid=grid, corner_values=np.array([energy.eval(s) for s in grid.slopes]))

    def value(self, s: float) -> float:
        """W-bar at a grid slope (the interpolant coincides with W there)."""
        return float(self.corner_values[self.grid.index_of(s)])


def _evaluate(energy, s: float) -> float:
    # accept either a smooth or a faceted energy
    if isinstance(energy, CrystallineEnergy):
        return energy.value(s)
    return float(energy.eval(s))


def delta(energy, s_prev: float, s_cur: float, s_next: float) -> float:
    """Second difference of chord slopes around a face.

        delta = [W(s_next) - W(s_cur)] / (s_next - s_cur)
              - [W(s_cur) - W(s_prev)] / (s_cur - s_prev)

    Exactly zero when s_next == s_prev (an inflection face).  Its sign matches
    sign(s_next - s_prev) whenever W is convex.
    """
    if s_cur == s_prev or s_cur == s_next:
        raise InvalidProfile("adjacent faces cannot share a slope")
    if s_next == s_prev:
        return 0.0
    wp = _evaluate(energy, s_prev)
    wc = _evaluate(energy, s_cur)
    wn = _evaluate(energy, s_next)
    return (wn - wc) / (s_next - s_cur) - (wc - wp) / (s_cur - s_prev)


def face_velocity(
    energy,
    s_prev: float,
    s_cur: float,
    s_next: float,
    length: float,
    r: float = 1.0,
    mode: str = "curvature",
) -> float:
    """Normal speed of a face: mobility(s) * (delta / length) * r.

    mode "curvature" uses the graph mobility sqrt(1 + s^2); mode "heat" uses
    mobility one (the linear-heat-equation variant of the scheme).
    """
    if length <= 0:
        from .errors import DegenerateFace

        raise DegenerateFace("face_velocity needs a positive face length")
    d = delta(energy, s_prev, s_cur, s_next)
    if d == 0.0:
        return 0.0
    mob = math.sqrt(1.0 + s_cur * s_cur) if mode == "curvature" else 1.0
    return mob * (d / length) * r


def total_energy(wbar: CrystallineEnergy, profile) -> float:
    """Faceted energy of a profile: sum of W-bar(slope) * length over faces."""
    return float(np.dot(wbar.corner_values[profile.slope_idx], profile.lengths()))


def w_tilde_prime(energy: SmoothEnergy, s: float) -> float:
    """Antiderivative of sqrt(1 + y^2) W''(y) from 0 to s.

    This is the flux density of the divergence-form equation
    u_t = (Wtilde'(u_x))_x.  Closed forms for the builtins, quadrature
    otherwise.
    """
    if energy.name == "area":
        # sqrt(1+y^2) * (1+y^2)^{-3/2} = 1/(1+y^2)
        return math.atan(s)
    if energy.name == "quadratic":
        return 0.5 * (s * math.sqrt(1.0 + s * s) + math.asinh(s))
    val, err = quad(lambda y: math.sqrt(1.0 + y * y) * energy.d2(y), 0.0, s, epsabs=1e-12, limit=200)
    return val


# ---------------------------------------------------------------------------
# angular form


def theta_from_slope(p: float):
    """Normal angle in (0, pi) of a graph face with slope p."""
    return np.arctan2(1.0, -np.asarray(p, dtype=float))


def slope_from_theta(theta: float):
    """Inverse of theta_from_slope: p = -cot(theta)."""
    th = np.asarray(theta, dtype=float)
    return -np.cos(th) / np.sin(th)


@dataclass(frozen=True)
class AngularEnergy:
    """Interfacial energy f(theta) of the normal angle, with derivatives."""

    name: str
    f: Callable[[float], float]
    d1: Callable[[float], float]
    d2: Callable[[float], float]
    d3: Callable[[float], float]


def angular_from_fourier(a0: float, cos_coeffs=(), sin_coeffs=()) -> AngularEnergy:
    """f(theta) = a0 + sum a_k cos(k theta) + sum b_k sin(k theta)."""
    a = np.asarray(cos_coeffs, dtype=float)
    b = np.asarray(sin_coeffs, dtype=float)
    ka = np.arange(1, len(a) + 1, dtype=float)
    kb = np.arange(1, len(b) + 1, dtype=float)

    def mk(order):
        # d^order/dtheta^order of the Fourier sum
        def g(theta):
            th = np.asarray(theta, dtype=float)
            ca = (ka**order) * a
            cb = (kb**order) * b
            phase = order * 0.5 * np.pi
            out = np.sum(ca * np.cos(np.multiply.outer(th, ka) + phase), axis=-1)
            out = out + np.sum(cb * np.sin(np.multiply.outer(th, kb) + phase), axis=-1)
            if order == 0:
                out = out + a0
            return out

        return g

    return AngularEnergy(name="fourier", f=mk(0), d1=mk(1), d2=mk(2), d3=mk(3))


def check_strict_stability(fe: AngularEnergy, n: int = 720, margin: float = 0.0) -> float:
    """Minimum of f + f'' on a sampled circle.  Raises unless it exceeds margin."""
    th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    stiff = np.asarray(fe.f(th)) + np.asarray(fe.d2(th))
    worst = float(stiff.min())
    if worst <= margin:
        at = float(th[int(np.argmin(stiff))])
        raise NotStrictlyStable(f"f + f'' reaches {worst:.6g} at theta = {at:.6g} (needs > {margin:.6g})")
    return worst


def angular_to_cartesian(fe: AngularEnergy, check_stability: bool = True) -> SmoothEnergy:
    """Graph-coordinate energy W(p) = f(theta(p)) sqrt(1 + p^2).

    Derivatives follow from theta'(p) = sin^2(theta) and sqrt(1+p^2) = csc(theta):

        W'   = f' sin - f cos
        W''  = (f + f'') sin^3
        W''' = (f' + f''') sin^5 + 3 (f + f'') sin^4 cos

    Strict stability f + f'' > 0 is exactly strict convexity of W.
    """
    if check_stability:
        # restrict the check to the upper half circle used by graphs
        th = np.linspace(1e-6, np.pi - 1e-6, 720)
        stiff = np.asarray(fe.f(th)) + np.asarray(fe.d2(th))
        if stiff.min() <= 0:
            at = float(th[int(np.argmin(stiff))])
            raise NotStrictlyStable(
                f"f + f'' reaches {float(stiff.min()):.6g} at theta = {at:.6g}; W would not be convex"
            )

    def w0(p):
        th = theta_from_slope(p)
        return fe.f(th) / np.sin(th)

    def w1(p):
        th = theta_from_slope(p)
        return fe.d1(th) * np.sin(th) - fe.f(th) * np.cos(th)

    def w2(p):
        th = theta_from_slope(p)
        return (fe.f(th) + fe.d2(th)) * np.sin(th) ** 3

    def w3(p):
        th = theta_from_slope(p)
        s, c = np.sin(th), np.cos(th)
        return (fe.d1(th) + fe.d3(th)) * s**5 + 3.0 * (fe.f(th) + fe.d2(th)) * s**4 * c

    return SmoothEnergy(name=f"angular[{fe.name}]", eval=w0, d1=w1, d2=w2, d3=w3)


# ---------------------------------------------------------------------------
# Wulff construction


@dataclass(frozen=True)
class WulffPolygon:
    """Bounded intersection of half-planes x . n(theta_j) <= f_j.

    ``vertices`` are counterclockwise; facet j joins vertex j to j+1 (cyclic)
    and has outward normal angle ``facet_angles[j]`` and length
    ``facet_lengths[j]``.  Angles whose constraint is redundant simply do not
    appear among the facets.
    """

    vertices: np.ndarray
    facet_angles: np.ndarray
    facet_lengths: np.ndarray


def wulff_polygon(angles, values, angle_tol: float = 1e-9, offset_tol: float = 1e-12) -> WulffPolygon:
    """Build the faceted Wulff shape from support values f_j at normal angles.

    Duplicate angles (within angle_tol) must agree in value to offset_tol.
    Raises UnboundedWulffSet when the normals leave an open half-circle empty,
    since the intersection is then an unbounded wedge or strip.
    """
    th = np.mod(np.asarray(angles, dtype=float), 2.0 * np.pi)
    fv = np.asarray(values, dtype=float)
    if th.shape != fv.shape or th.ndim != 1 or th.size < 3:
        raise UnboundedWulffSet("need at least three (angle, value) pairs")
    if np.any(fv <= 0):
        raise UnboundedWulffSet("support values must be positive (origin interior)")

    order = np.argsort(th)
    th, fv = th[order], fv[order]
    keep_th, keep_fv = [th[0]], [fv[0]]
    for t, v in zip(th[1:], fv[1:]):
        if t - keep_th[-1] <= angle_tol:
            if abs(v - keep_fv[-1]) > offset_tol:
                raise UnboundedWulffSet(f"conflicting values at duplicate angle {t:.12g}")
            continue
        keep_th.append(t)
        keep_fv.append(v)
    th = np.asarray(keep_th)
    fv = np.asarray(keep_fv)

    gaps = np.diff(np.concatenate([th, [th[0] + 2.0 * np.pi]]))
    if gaps.max() >= np.pi - 1e-12:
        raise UnboundedWulffSet("normal directions leave an open half-circle uncovered")

    normals = np.column_stack([np.cos(th), np.sin(th)])
    halfspaces = np.column_stack([normals, -fv])
    interior = np.zeros(2)
    hs = HalfspaceIntersection(halfspaces, interior)
    hull = ConvexHull(hs.intersections)
    verts = hs.intersections[hull.vertices]  # counterclockwise

    # identify each edge's outward normal with one of the input angles
    edges = np.roll(verts, -1, axis=0) - verts
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    edge_angles = np.mod(np.arctan2(-edges[:, 0], edges[:, 1]), 2.0 * np.pi)

    facet_angles = []
    facet_lengths = []
    for ang, ln in zip(edge_angles, lengths):
        if ln <= offset_tol:
            continue
        diff = np.abs(np.mod(th - ang + np.pi, 2.0 * np.pi) - np.pi)
        j = int(np.argmin(diff))
        if diff[j] > 1e-7:
            raise UnboundedWulffSet("hull edge does not match any input normal")
        facet_angles.append(th[j])
        facet_lengths.append(float(ln))

    return WulffPolygon(
        vertices=verts,
        facet_angles=np.asarray(facet_angles),
        facet_lengths=np.asarray(facet_lengths),
    )


def delta_tilde(wp: WulffPolygon, theta: float, angle_tol: float = 1e-9) -> float:
    """Length of the Wulff facet whose outward normal is theta.

    Equals the jump f-bar'(theta+0) - f-bar'(theta-0) of the support function
    of the polygon.  Raises NotAFacet when no facet matches.
    """
    t = math.fmod(theta, 2.0 * math.pi)
    if t < 0:
        t += 2.0 * math.pi
    diff = np.abs(np.mod(wp.facet_angles - t + np.pi, 2.0 * np.pi) - np.pi)
    j = int(np.argmin(diff))
    if diff[j] > angle_tol:
        raise NotAFacet(f"no facet with normal angle {theta:.12g}")
    return float(wp.facet_lengths[j])


def angular_face_velocity(fe: AngularEnergy, th_prev: float, th_cur: float, th_next: float, big_l: float) -> float:
    """Facet speed of a crystalline polygon edge in angular variables.

        V = (1/L) [ f(th_prev) csc(th_cur - th_prev)
                    - f(th_cur) (cot(th_cur - th_prev) + cot(th_next - th_cur))
                    + f(th_next) csc(th_next - th_cur) ]

    L is the full facet length; neighbors must have distinct angles.
    """
    if big_l <= 0:
        from .errors import DegenerateFace

        raise DegenerateFace("facet length must be positive")
    dm = th_cur - th_prev
    dp = th_next - th_cur
    if math.isclose(math.sin(dm), 0.0, abs_tol=1e-15) or math.isclose(math.sin(dp), 0.0, abs_tol=1e-15):
        raise InvalidProfile("adjacent normal angles must differ")
    val = (
        fe.f(th_prev) / math.sin(dm)
        - fe.f(th_cur) * (1.0 / math.tan(dm) + 1.0 / math.tan(dp))
        + fe.f(th_next) / math.sin(dp)
    )
    return float(val) / big_l


# ---------------------------------------------------------------------------
# growth conditions and diagnostics


@dataclass(frozen=True)
class GrowthReport:
    """Sampled growth constants of a smooth energy on a slope interval.

    c1 and c2 bound (1+s^2)^{3/2} W''(s) from below and above; c3 bounds
    (1+s^2)^2 |W'''(s)|.  ``satisfied`` means c1 > 0 and both maxima finite.
    """

    c1: float
    c2: float
    c3: float
    slope_range: tuple[float, float]
    samples: int

    @property
    def satisfied(self) -> bool:
        return self.c1 > 0 and math.isfinite(self.c2) and math.isfinite(self.c3)


def check_growth_conditions(energy: SmoothEnergy, slope_range: tuple[float, float], samples: int = 2001) -> GrowthReport:
    lo, hi = slope_range
    s = np.linspace(lo, hi, samples)
    g = (1.0 + s * s) ** 1.5 * np.asarray(energy.d2(s), dtype=float)
    h = (1.0 + s * s) ** 2 * np.abs(np.asarray(energy.d3(s), dtype=float))
    return GrowthReport(
        c1=float(g.min()),
        c2=float(g.max()),
        c3=float(h.max()),
        slope_range=(float(lo), float(hi)),
        samples=samples,
    )


def frank_diagram(fe: AngularEnergy, n: int = 360) -> np.ndarray:
    """Polar plot points of 1/f: rows (x, y) for theta on a uniform circle."""
    th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    fv = np.asarray(fe.f(th), dtype=float)
    if np.any(fv <= 0):
        raise NotStrictlyStable("frank diagram needs f > 0 everywhere")
    r = 1.0 / fv
    return np.column_stack([r * np.cos(th), r * np.sin(th)])
