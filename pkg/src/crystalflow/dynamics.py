"""Evolution law for admissible profiles.

Each face carries a vertical velocity set by the energy chord imbalance
across it; corners then move so faces stay attached.  Boundary behavior is
encoded as a ghost face extending the profile past each wall, so one
assembly routine serves all boundary conditions.  The routines here are
pure: they map a profile (plus time) to rates, and profiles to profiles for
the insertion surgeries.  Time stepping lives in evolve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .energy import CrystallineEnergy, SlopeGrid, SmoothEnergy
from .errors import ConfigError, DegenerateFace, GridError, InvalidProfile, StepRejected
from .profile import Profile

__all__ = [
    "HomogeneousDirichlet",
    "ConstantNeumann",
    "GeneralDirichlet",
    "BoundaryCondition",
    "FlowModel",
    "GhostExtension",
    "RateVector",
    "coefficients",
    "corner_velocity",
    "ghost_extension",
    "assemble_rates",
    "insert_boundary_face",
]


@dataclass(frozen=True)
class HomogeneousDirichlet:
    """u = 0 at both walls for all time."""


@dataclass(frozen=True)
class ConstantNeumann:
    """Fixed boundary slopes a at x = 0 and b at x = 1.

    The end faces keep these slopes forever; they must be grid slopes and
    the construction pins them, so the closure is purely geometric.
    """

    a: float
    b: float


@dataclass(frozen=True)
class GeneralDirichlet:
    """Prescribed wall values a(t) at x = 0 and b(t) at x = 1.

    a_prime and b_prime are the exact time derivatives; the scheme consumes
    the derivative (the end-face vertical velocity) and uses the value only
    for reporting.
    """

    a: Callable[[float], float]
    a_prime: Callable[[float], float]
    b: Callable[[float], float]
    b_prime: Callable[[float], float]


BoundaryCondition = Union[HomogeneousDirichlet, ConstantNeumann, GeneralDirichlet]


@dataclass(frozen=True)
class FlowModel:
    """Energy pair plus motion mode, with the lookup tables rates need.

    mode "curvature" scales the chord imbalance by sqrt(1 + s^2); mode
    "heat" uses unit mobility and requires the quadratic energy, which makes
    the face velocity the discrete second difference of the graph.
    """

    wbar: CrystallineEnergy
    energy: SmoothEnergy | None = None
    mode: str = "curvature"
    mobility_table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode not in ("curvature", "heat"):
            raise ConfigError(f"unknown mode {self.mode!r}; expected 'curvature' or 'heat'")
        if self.mode == "heat" and self.energy is not None and self.energy.name != "quadratic":
            raise ConfigError("heat mode is the flow of the quadratic energy with unit mobility")
        slopes = self.wbar.grid.slopes
        mob = np.sqrt(1.0 + slopes * slopes) if self.mode == "curvature" else np.ones(len(slopes))
        object.__setattr__(self, "mobility_table", mob)

    @property
    def grid(self) -> SlopeGrid:
        return self.wbar.grid

    @classmethod
    def from_smooth(cls, energy: SmoothEnergy, grid: SlopeGrid, mode: str = "curvature") -> "FlowModel":
        return cls(wbar=CrystallineEnergy.from_smooth(energy, grid), energy=energy, mode=mode)


@dataclass(frozen=True)
class GhostExtension:
    """One virtual face past each wall.

    left_idx / right_idx are slope-grid indices of the ghost faces (None
    when no consistent ghost exists, which only happens for prescribed wall
    motion pulling against the profile's orientation).  r_left / r_right are
    the end-face velocity factors; they differ from 1 only for fixed-slope
    walls.  monitor_* is the demanded-to-available velocity ratio for
    prescribed wall motion: it must stay at or below 1, and crossing 1 is
    the signal that the wall needs a new face.
    """

    left_idx: int | None
    right_idx: int | None
    r_left: float = 1.0
    r_right: float = 1.0
    feasible_left: bool = True
    feasible_right: bool = True
    monitor_left: float = float("nan")
    monitor_right: float = float("nan")


def coefficients(s_prev: float, s_cur: float, s_next: float) -> tuple[float, float, float]:
    """Stencil weights (c0, c_prev, c_next) of a corner-value second difference.

    They satisfy c0 + c_prev + c_next = 0, so constants are annihilated.
    """
    if s_cur == s_prev or s_next == s_cur:
        raise InvalidProfile("adjacent faces cannot share a slope")
    dm = s_cur - s_prev
    dp = s_next - s_cur
    return (1.0 / dm + 1.0 / dp, -1.0 / dm, -1.0 / dp)


def corner_velocity(ut_left: float, ut_right: float, s_left: float, s_right: float) -> float:
    """Horizontal speed of the corner between two faces moving vertically."""
    if s_left == s_right:
        raise InvalidProfile("a corner needs two distinct slopes")
    return -(ut_right - ut_left) / (s_right - s_left)


def _mirror(idx0: int, idx1: int) -> int:
    return 2 * idx0 - idx1


def ghost_extension(profile: Profile, model: FlowModel, bc: BoundaryCondition, t: float = 0.0) -> GhostExtension:
    """Ghost faces and end-face factors for the given wall behavior."""
    idx = profile.slope_idx
    n = len(idx)
    grid = model.grid

    if isinstance(bc, HomogeneousDirichlet):
        if n == 1:
            raise DegenerateFace("pinned-zero walls need at least two faces")
        # repeating the inner neighbor's slope kills the end chord imbalance
        return GhostExtension(int(idx[1]), int(idx[-2]))

    if isinstance(bc, ConstantNeumann):
        if n == 1:
            return GhostExtension(None, None)
        gl = _mirror(int(idx[0]), int(idx[1]))
        gr = _mirror(int(idx[-1]), int(idx[-2]))
        if gl < 0 or gl >= len(grid) or gr < 0 or gr >= len(grid):
            raise GridError("slope grid does not extend one step past a fixed boundary slope")
        s = grid.slopes
        r_left = (s[idx[1]] - s[idx[0]]) / (s[idx[1]] - s[gl])
        r_right = (s[idx[-2]] - s[idx[-1]]) / (s[idx[-2]] - s[gr])
        return GhostExtension(gl, gr, float(r_left), float(r_right))

    if isinstance(bc, GeneralDirichlet):
        if n == 1:
            raise DegenerateFace("moving-wall evolution needs at least two faces")
        lengths = profile.lengths()
        chords = model.wbar.chords
        mob = model.mobility_table

        def side(i0: int, i1: int, rate: float, length: float, left: bool):
            sigma = 0 if rate == 0.0 else (1 if rate > 0 else -1)
            inner = np.sign(i1 - i0) if left else np.sign(i0 - i1)
            if sigma == 0:
                return int(i1), True, 0.0
            if sigma != inner:
                return None, False, float("nan")
            g = _mirror(i0, i1)
            if g < 0 or g >= len(grid):
                raise GridError("slope grid does not extend one step past a moving wall")
            if left:
                delta = chords[min(i0, i1)] - chords[min(g, i0)]
            else:
                delta = chords[min(g, i0)] - chords[min(i0, i1)]
            return int(g), True, float(length * rate / (mob[i0] * delta))

        a_rate = float(bc.a_prime(t))
        b_rate = float(bc.b_prime(t))
        gl, fl, ml = side(int(idx[0]), int(idx[1]), a_rate, float(lengths[0]), left=True)
        gr, fr, mr = side(int(idx[-1]), int(idx[-2]), b_rate, float(lengths[-1]), left=False)
        return GhostExtension(gl, gr, 1.0, 1.0, fl, fr, ml, mr)

    raise ConfigError(f"unsupported boundary condition {type(bc).__name__}")


@dataclass(frozen=True)
class RateVector:
    """Complete time derivative of a profile's state.

    deltas holds the chord imbalance per face for diagnostics; an end entry
    is nan when the wall velocity is prescribed and no consistent ghost
    exists there (the velocity is the prescription, not a formula).
    """

    face_velocities: np.ndarray
    corner_velocities: np.ndarray
    length_rates: np.ndarray
    left_value_rate: float
    deltas: np.ndarray
    ghost: GhostExtension

    @property
    def max_face_speed(self) -> float:
        return float(np.max(np.abs(self.face_velocities)))


def assemble_rates(profile: Profile, model: FlowModel, bc: BoundaryCondition, t: float = 0.0) -> RateVector:
    """Face velocities, corner velocities and length rates at time t.

    Raises StepRejected on a structurally broken input (negative lengths,
    rates that fail to be finite) so the integrator can shrink its step.
    """
    idx = profile.slope_idx
    n = len(idx)
    lengths = profile.lengths()
    if float(lengths.min()) < -1e-15:
        raise StepRejected(f"negative face length {float(lengths.min())!r}")

    if n == 1 and isinstance(bc, ConstantNeumann):
        # both walls pin the one slope; nothing can move
        zero = np.zeros(1)
        return RateVector(zero, np.zeros(0), zero.copy(), 0.0, zero.copy(), GhostExtension(None, None))
    if n == 1 and isinstance(bc, HomogeneousDirichlet) and model.grid.slopes[idx[0]] == 0.0:
        # exact extinction: the flat zero state is the only admissible
        # single-face state with pinned-zero walls, and it is stationary
        zero = np.zeros(1)
        return RateVector(zero, np.zeros(0), zero.copy(), 0.0, zero.copy(), GhostExtension(None, None))

    ghost = ghost_extension(profile, model, bc, t)
    chords = model.wbar.chords
    slopes = model.grid.slopes[idx]
    mob = model.mobility_table[idx]

    inner = chords[np.minimum(idx[:-1], idx[1:])]  # chord over each corner
    deltas = np.empty(n)
    deltas[:-1] = inner
    deltas[-1] = chords[min(ghost.right_idx, idx[-1])] if ghost.right_idx is not None else np.nan
    deltas[1:] -= inner
    deltas[0] -= chords[min(ghost.left_idx, idx[0])] if ghost.left_idx is not None else np.nan

    r = np.ones(n)
    r[0] = ghost.r_left
    r[-1] = ghost.r_right
    with np.errstate(divide="ignore", invalid="ignore"):
        ut = mob * deltas * r / lengths
    if isinstance(bc, GeneralDirichlet):
        ut[0] = float(bc.a_prime(t))
        ut[-1] = float(bc.b_prime(t))

    if not np.all(np.isfinite(ut)):
        raise StepRejected("non-finite face velocity")
    xdot = -(ut[1:] - ut[:-1]) / (slopes[1:] - slopes[:-1])
    if len(xdot) and not np.all(np.isfinite(xdot)):
        raise StepRejected("non-finite corner velocity")
    padded = np.concatenate([[0.0], xdot, [0.0]])
    ldot = np.diff(padded)
    return RateVector(ut, xdot, ldot, float(ut[0]), deltas, ghost)


def insert_boundary_face(profile: Profile, side: str, slope_idx: int) -> Profile:
    """Zero-length face glued to a wall; the caller picks its slope.

    Used at the instant a moving wall either reverses against the profile's
    orientation or outruns what the end face can deliver.
    """
    slope_idx = int(slope_idx)
    if not (0 <= slope_idx < len(profile.grid)):
        raise GridError(f"slope index {slope_idx} outside the grid")
    if side == "left":
        if abs(slope_idx - int(profile.slope_idx[0])) != 1:
            raise InvalidProfile("new boundary face must sit on a slope adjacent to the end face")
        corners = np.concatenate([[0.0, 0.0], profile.corners[1:]])
        new_idx = np.concatenate([[slope_idx], profile.slope_idx])
    elif side == "right":
        if abs(slope_idx - int(profile.slope_idx[-1])) != 1:
            raise InvalidProfile("new boundary face must sit on a slope adjacent to the end face")
        corners = np.concatenate([profile.corners[:-1], [1.0, 1.0]])
        new_idx = np.concatenate([profile.slope_idx, [slope_idx]])
    else:
        raise ConfigError(f"side must be 'left' or 'right', got {side!r}")
    return Profile(grid=profile.grid, corners=corners, slope_idx=new_idx, left_value=profile.left_value)
