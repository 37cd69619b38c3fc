"""Admissible piecewise-linear profiles on [0, 1] and their construction.

A profile is determined by its corner abscissas, one slope-grid index per
face, and the value at x = 0.  Admissibility means consecutive faces use
adjacent grid slopes; that single structural constraint is what makes the
face-by-face evolution well posed, so it is validated aggressively.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .energy import SlopeGrid
from .errors import CoverageError, GridError, InvalidProfile, UnsupportedCollapse

__all__ = [
    "Profile",
    "validate",
    "validate_or_raise",
    "build_initial",
    "initial_fit_report",
    "merge_collapsed",
]


@dataclass(frozen=True)
class Profile:
    """Piecewise-linear graph over [0, 1] with slopes pinned to a grid.

    corners[0] == 0 and corners[-1] == 1 always; face i spans
    [corners[i], corners[i+1]] with slope grid.slopes[slope_idx[i]].
    Instances are value-semantic snapshots: surgery returns new objects.
    """

    grid: SlopeGrid
    corners: np.ndarray
    slope_idx: np.ndarray
    left_value: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "corners", np.asarray(self.corners, dtype=float))
        object.__setattr__(self, "slope_idx", np.asarray(self.slope_idx, dtype=np.int64))

    @property
    def n_faces(self) -> int:
        return len(self.slope_idx)

    def lengths(self) -> np.ndarray:
        return np.diff(self.corners)

    def slopes(self) -> np.ndarray:
        return self.grid.slopes[self.slope_idx]

    def corner_values(self) -> np.ndarray:
        """Profile value at every corner, left to right."""
        v = np.empty(len(self.corners))
        v[0] = self.left_value
        np.cumsum(self.slopes() * self.lengths(), out=v[1:])
        v[1:] += self.left_value
        return v

    def evaluate(self, x) -> np.ndarray | float:
        out = np.interp(x, self.corners, self.corner_values())
        return float(out) if np.isscalar(x) else out

    def evaluate_slope(self, x) -> np.ndarray | float:
        """Slope of the face containing x; corners report their left face."""
        idx = np.searchsorted(self.corners, x, side="left")
        idx = np.clip(idx, 1, self.n_faces) - 1
        out = self.grid.slopes[self.slope_idx[idx]]
        return float(out) if np.isscalar(x) else out

    # -- serialization ------------------------------------------------------

    def to_csv_rows(self) -> list[tuple]:
        """(face_index, x_left, x_right, slope, length) per face."""
        s = self.slopes()
        ln = self.lengths()
        return [
            (i + 1, float(self.corners[i]), float(self.corners[i + 1]), float(s[i]), float(ln[i]))
            for i in range(self.n_faces)
        ]

    def to_json_dict(self, t: float | None = None) -> dict:
        d = {
            "corners": [float(x) for x in self.corners],
            "slope_idx": [int(j) for j in self.slope_idx],
            "slopes": [float(s) for s in self.slopes()],
            "left_value": float(self.left_value),
        }
        if t is not None:
            d["t"] = float(t)
        return d

    @classmethod
    def from_json_dict(cls, d: dict, grid: SlopeGrid) -> "Profile":
        return cls(
            grid=grid,
            corners=np.asarray(d["corners"], dtype=float),
            slope_idx=np.asarray(d["slope_idx"], dtype=np.int64),
            left_value=float(d["left_value"]),
        )

    def to_json(self, t: float | None = None) -> str:
        return json.dumps(self.to_json_dict(t))


# ---------------------------------------------------------------------------
# validation


def validate(profile: Profile, allow_zero_faces: bool = False) -> list[str]:
    """Structural checks.  Returns human-readable violations; empty means valid.

    allow_zero_faces admits zero-length faces, which exist transiently at the
    instant a face is created at the boundary or localized for removal.
    """
    v: list[str] = []
    c = profile.corners
    idx = profile.slope_idx
    n = len(idx)
    if n < 1:
        v.append("profile has no faces")
        return v
    if len(c) != n + 1:
        v.append(f"corner count {len(c)} does not match face count {n}")
        return v
    if abs(c[0]) > 1e-14:
        v.append(f"first corner is {c[0]!r}, expected 0")
    if abs(c[-1] - 1.0) > 1e-12:
        v.append(f"last corner is {c[-1]!r}, expected 1")
    d = np.diff(c)
    bad = np.where(d < 0)[0] if allow_zero_faces else np.where(d <= 0)[0]
    for i in bad:
        v.append(f"face {i + 1} has non-positive length {d[i]!r}")
    if idx.min() < 0 or idx.max() >= len(profile.grid):
        v.append("slope index out of grid bounds")
    jumps = np.abs(np.diff(idx))
    for i in np.where(jumps != 1)[0]:
        v.append(f"faces {i + 1} and {i + 2} are not adjacent on the slope grid (jump {jumps[i]})")
    return v


def validate_or_raise(profile: Profile, allow_zero_faces: bool = False) -> None:
    problems = validate(profile, allow_zero_faces=allow_zero_faces)
    if problems:
        raise InvalidProfile("; ".join(problems))


# ---------------------------------------------------------------------------
# collapse surgery


def merge_collapsed(profile: Profile, i: int) -> Profile:
    """Remove the zero-length face at 1-based index i and stitch neighbors.

    Three shapes are supported:
      * interior single face whose two neighbors share a slope: the neighbors
        join into one face;
      * interior pair (faces i and i+1 both zero length): both are removed and
        the outer neighbors, which end up on adjacent slopes, meet at a corner
        without joining;
      * boundary face: dropped outright, the next face inherits the wall (the
        join happens with the mirror face of the reflected extension).
    Anything else raises UnsupportedCollapse.
    """
    n = profile.n_faces
    if not (1 <= i <= n):
        raise UnsupportedCollapse(f"face index {i} out of range 1..{n}")
    k = i - 1
    ln = profile.lengths()
    tol = 1e-9 * max(1.0, float(ln.max()))
    if ln[k] > tol:
        raise UnsupportedCollapse(f"face {i} has length {ln[k]!r}, not collapsed")
    if ln[k] > 0 and k - 1 >= 0 and ln[k - 1] <= tol:
        return merge_collapsed(profile, i - 1)  # canonicalize a pair to its left face

    c = profile.corners
    idx = profile.slope_idx

    if k == 0 or k == n - 1:
        if n == 1:
            raise UnsupportedCollapse("cannot remove the only face")
        if k == 0:
            new_c = np.concatenate([[0.0], c[2:]])
            new_idx = idx[1:]
            new_left = profile.left_value + profile.grid.slopes[idx[0]] * ln[0]
        else:
            new_c = np.concatenate([c[:-2], [1.0]])
            new_idx = idx[:-1]
            new_left = profile.left_value
        return replace(profile, corners=new_c, slope_idx=new_idx, left_value=new_left)

    if k + 1 <= n - 1 and ln[k + 1] <= tol:
        # paired disappearance of faces k, k+1 (1-based i, i+1)
        if k + 2 > n - 1:
            # the pair ends at the right wall: drop both, mirror-extension join
            new_idx = idx[:k]
            new_c = np.concatenate([c[:k], [1.0]])
            return replace(profile, corners=new_c, slope_idx=new_idx)
        if abs(int(idx[k - 1]) - int(idx[k + 2])) != 1:
            raise UnsupportedCollapse("outer neighbors of a paired collapse are not on adjacent slopes")
        new_idx = np.concatenate([idx[:k], idx[k + 2 :]])
        new_c = np.concatenate([c[: k + 1], c[k + 3 :]])
        return replace(profile, corners=new_c, slope_idx=new_idx)

    if idx[k - 1] != idx[k + 1]:
        raise UnsupportedCollapse(
            f"face {i} vanished between distinct slopes "
            f"{profile.grid.slopes[idx[k - 1]]!r} and {profile.grid.slopes[idx[k + 1]]!r}"
        )
    new_idx = np.concatenate([idx[:k], idx[k + 2 :]])
    new_c = np.concatenate([c[:k], c[k + 2 :]])
    return replace(profile, corners=new_c, slope_idx=new_idx)


# ---------------------------------------------------------------------------
# initial data construction
#
# The profile is assembled as a union of straight lines: tangent lines of u0
# at the abscissas where u0' passes through an admissible slope, bridge lines
# through interior extrema of u0' where two tangent families would otherwise
# be parallel, and anchor lines through the two boundary points.  Corners are
# intersections of consecutive lines.  Building from lines (rather than by
# integrating a slope sequence) is what makes both boundary values exact.


@dataclass(frozen=True)
class _Line:
    slope_idx: int
    x0: float
    y0: float
    anchored: bool = False  # passes through a boundary point; wins dedup ties

    def intercept(self, grid: SlopeGrid) -> float:
        return self.y0 - grid.slopes[self.slope_idx] * self.x0


def _refine_extrema(du0: Callable, xs: np.ndarray, vs: np.ndarray) -> list[tuple[float, float]]:
    """Interior extrema (abscissa, value) of u0', refined from a dense sample."""
    out = []
    sign = np.sign(np.diff(vs))
    for i in range(1, len(sign)):
        if sign[i] != 0 and sign[i - 1] != 0 and sign[i] != sign[i - 1]:
            a, b = xs[i - 1], xs[i + 1]
            want_max = sign[i - 1] > 0
            res = minimize_scalar(
                (lambda x: -du0(x)) if want_max else du0,
                bounds=(a, b),
                method="bounded",
                options={"xatol": 1e-14},
            )
            x = float(res.x)
            out.append((x, float(du0(x))))
    return out


def _stretch_crossings(
    du0: Callable, xa: float, xb: float, va: float, vb: float, grid: SlopeGrid
) -> list[tuple[int, float]]:
    """(slope index, tangency abscissa) for grid slopes strictly between va and vb."""
    lo, hi = (va, vb) if va < vb else (vb, va)
    j_lo = int(np.searchsorted(grid.slopes, lo, side="right"))
    j_hi = int(np.searchsorted(grid.slopes, hi, side="left"))
    hits = []
    for j in range(j_lo, j_hi):
        s = grid.slopes[j]
        xi = brentq(lambda x: du0(x) - s, xa, xb, xtol=1e-14)
        hits.append((j, float(xi)))
    hits.sort(key=lambda t: t[1])
    return hits


def _anchor_index(grid: SlopeGrid, v_bnd: float, v_inner: float, pinned: float | None) -> int:
    """Admissible slope for a boundary face.

    Pinned (Neumann) data dictates the slope outright.  Otherwise the anchor
    takes the grid slope one step beyond the first tangent family, on the
    wall's side of u0': below the tangents the anchor line would cut corners
    out of order on coarse grids.
    """
    if pinned is not None:
        j = grid.index_of(pinned)
        if abs(v_bnd - pinned) > grid.m + 1e-9:
            raise CoverageError(f"boundary slope {pinned!r} incompatible with u0' = {v_bnd!r}")
        return j
    if v_inner < v_bnd:
        try:
            return grid.ceil_index(v_bnd)
        except GridError:
            return len(grid) - 1  # v_bnd sits on the top slope within coverage tolerance
    if v_inner > v_bnd:
        try:
            return grid.floor_index(v_bnd)
        except GridError:
            return 0
    j = int(np.argmin(np.abs(grid.slopes - v_bnd)))
    if abs(grid.slopes[j] - v_bnd) > 1e-9:
        raise CoverageError(f"flat initial data with inadmissible slope {v_bnd!r}")
    return j


def build_initial(
    u0: Callable[[float], float],
    du0: Callable[[float], float],
    grid: SlopeGrid,
    bc_kind: str = "dirichlet",
    neumann_slopes: tuple[float, float] | None = None,
    dense: int = 4096,
) -> Profile:
    """Admissible approximation of smooth initial data u0.

    Guarantees, for grid fineness m: adjacent faces sit on adjacent slopes,
    the slope error is at most m in sup norm, both boundary values are
    reproduced exactly, and the face count is of order TV(u0')/m.  For
    Neumann data the boundary faces take exactly the prescribed grid slopes.
    """
    xs = np.linspace(0.0, 1.0, dense + 1)
    vs = np.array([float(du0(x)) for x in xs])
    if vs.min() < grid.slopes[0] - 1e-12 or vs.max() > grid.slopes[-1] + 1e-12:
        raise CoverageError(
            f"u0' spans [{vs.min():.6g}, {vs.max():.6g}] but the grid covers only "
            f"[{grid.slopes[0]:.6g}, {grid.slopes[-1]:.6g}]"
        )

    left_pin = right_pin = None
    if bc_kind == "neumann":
        if neumann_slopes is None:
            raise CoverageError("neumann construction needs the (a, b) boundary slopes")
        left_pin, right_pin = neumann_slopes

    extrema = _refine_extrema(du0, xs, vs)
    nodes = [(0.0, float(vs[0]))] + extrema + [(1.0, float(vs[-1]))]

    # items: real lines and extremum markers, in left-to-right order
    items: list[tuple[str, object]] = [
        ("line", _Line(_anchor_index(grid, vs[0], nodes[1][1], left_pin), 0.0, float(u0(0.0)), anchored=True))
    ]
    for (xa, va), (xb, vb) in zip(nodes[:-1], nodes[1:]):
        for j, xi in _stretch_crossings(du0, xa, xb, va, vb, grid):
            items.append(("line", _Line(j, xi, float(u0(xi)))))
        if xb < 1.0:
            items.append(("ext", (xb, vb)))
    items.append(
        ("line", _Line(_anchor_index(grid, vs[-1], nodes[-2][1], right_pin), 1.0, float(u0(1.0)), anchored=True))
    )

    # A bridge line through an extremum is inserted only where the previous and
    # next tangent lines share a slope (two parallel tangent families meeting);
    # extrema that cross no grid slope disappear without a trace.
    lines: list[_Line] = []
    for pos, (kind, payload) in enumerate(items):
        if kind == "line":
            lines.append(payload)  # type: ignore[arg-type]
            continue
        ex, ev = payload  # type: ignore[misc]
        nxt = next((p for k2, p in items[pos + 1 :] if k2 == "line"), None)
        prev = lines[-1]
        if nxt is None or prev.slope_idx != nxt.slope_idx:
            continue
        jnear = int(np.argmin(np.abs(grid.slopes - ev)))
        if abs(grid.slopes[jnear] - ev) <= 1e-12 * max(1.0, abs(ev)):
            bridge = jnear  # the extremum value is itself admissible
        elif ev > grid.slopes[prev.slope_idx]:
            if prev.slope_idx + 1 >= len(grid):
                raise CoverageError(f"grid has no slope above the extremum value {ev!r}")
            bridge = prev.slope_idx + 1
        else:
            if prev.slope_idx - 1 < 0:
                raise CoverageError(f"grid has no slope below the extremum value {ev!r}")
            bridge = prev.slope_idx - 1
        lines.append(_Line(bridge, float(ex), float(u0(ex))))

    # a tangent duplicating an adjacent anchor is replaced by the anchor
    deduped: list[_Line] = []
    for ln in lines:
        if deduped and deduped[-1].slope_idx == ln.slope_idx:
            if ln.anchored and not deduped[-1].anchored:
                deduped[-1] = ln
            elif ln.anchored and deduped[-1].anchored:
                if abs(ln.intercept(grid) - deduped[-1].intercept(grid)) > 1e-12:
                    raise CoverageError("boundary anchors demand one slope but two distinct lines")
            continue
        deduped.append(ln)

    if len(deduped) == 1:
        prof = Profile(
            grid=grid,
            corners=np.array([0.0, 1.0]),
            slope_idx=np.array([deduped[0].slope_idx]),
            left_value=float(u0(0.0)),
        )
        validate_or_raise(prof)
        return prof

    jumps = np.abs(np.diff([ln.slope_idx for ln in deduped]))
    if np.any(jumps != 1):
        raise CoverageError("construction produced non-adjacent consecutive slopes; data unresolvable on this grid")

    gslopes = grid.slopes
    corners = [0.0]
    for a, b in zip(deduped[:-1], deduped[1:]):
        ma, mb = gslopes[a.slope_idx], gslopes[b.slope_idx]
        corners.append(float((b.intercept(grid) - a.intercept(grid)) / (ma - mb)))
    corners.append(1.0)
    corners_arr = np.asarray(corners)
    if np.any(np.diff(corners_arr) <= 0):
        raise CoverageError("tangent construction produced non-monotone corners; grid too coarse for this data")

    prof = Profile(
        grid=grid,
        corners=corners_arr,
        slope_idx=np.asarray([ln.slope_idx for ln in deduped], dtype=np.int64),
        left_value=float(u0(0.0)),
    )
    validate_or_raise(prof)
    return prof


def initial_fit_report(profile: Profile, u0: Callable, du0: Callable, samples: int = 1001) -> dict:
    """Closeness diagnostics of a constructed profile against its data."""
    xs = np.linspace(0.0, 1.0, samples)
    slope_err = np.abs(profile.evaluate_slope(xs) - np.array([float(du0(x)) for x in xs]))
    value_err = np.abs(profile.evaluate(xs) - np.array([float(u0(x)) for x in xs]))
    dv = np.array([float(du0(x)) for x in np.linspace(0, 1, 4097)])
    junction_jumps = np.abs(np.diff(profile.grid.slopes[profile.slope_idx]))
    return {
        "sup_slope_error": float(slope_err.max()),
        "sup_value_error": float(value_err.max()),
        "max_junction_jump": float(junction_jumps.max()) if len(junction_jumps) else 0.0,
        "n_faces": profile.n_faces,
        "total_variation": float(np.abs(np.diff(dv)).sum()),
        "m": profile.grid.m,
    }
