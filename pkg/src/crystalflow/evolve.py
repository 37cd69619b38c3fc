"""Event-driven time integration of the face system.

Between events the interior corner abscissas and the left wall value obey a
smooth ODE, integrated with classical RK4.  Events are located by bisecting
the step length: a face shrinking through the collapse threshold, or a
moving wall outrunning its end face.  A surgery at the event keeps the
profile admissible and integration resumes from the post-surgery state.

Event log vocabulary (the `kind` field):
  collapse-case-i    one face vanished, its neighbors joined
  collapse-case-ii   two adjacent faces vanished together
  creation-case-i    wall reversed against the end face; new face inserted
  creation-case-ii   wall outran the end face; ghost slope materialized
A vanishing wall face reads, through the odd reflection across the wall,
as case (i) with the mirror neighbor; such events carry note "boundary".
"""

from __future__ import annotations

import csv
import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .dynamics import (
    BoundaryCondition,
    ConstantNeumann,
    FlowModel,
    GeneralDirichlet,
    HomogeneousDirichlet,
    assemble_rates,
    ghost_extension,
    insert_boundary_face,
)
from .energy import total_energy
from .errors import ConfigError, EventLocalizationError, InvalidProfile, StepRejected, UnsupportedCollapse
from .profile import Profile, merge_collapsed, validate_or_raise

__all__ = [
    "IntegratorOptions",
    "Event",
    "Trajectory",
    "run",
    "write_snapshots_csv",
    "write_monitors_csv",
    "write_events_jsonl",
]

R_SLACK = 1e-9  # tolerated overshoot of the wall-demand ratio past 1


@dataclass(frozen=True)
class IntegratorOptions:
    """Step control knobs.  Every default is proportional to problem scale:
    dt_max and event_time_tol to the time horizon, collapse_tol to the
    shortest initial face.  observer, when given, is called with (t, profile)
    at every accepted state, including post-surgery states."""

    t_end: float
    dt_max: float | None = None  # default t_end / 1000
    safety: float = 0.2
    collapse_tol: float | None = None  # default 1e-10 * min initial length
    event_time_tol: float | None = None  # default 1e-12 * t_end
    snapshot_times: tuple[float, ...] | None = None
    max_halvings: int = 60
    max_steps: int = 2_000_000
    observer: Callable[[float, Profile], None] | None = None

    def __post_init__(self):
        if not (self.t_end > 0.0 and math.isfinite(self.t_end)):
            raise InvalidProfile(f"time horizon must be positive and finite, got {self.t_end!r}")
        if not (0.0 < self.safety <= 1.0):
            raise InvalidProfile(f"safety factor must lie in (0, 1], got {self.safety!r}")
        for name in ("dt_max", "collapse_tol", "event_time_tol"):
            v = getattr(self, name)
            if v is not None and not v > 0.0:
                raise InvalidProfile(f"{name} must be positive, got {v!r}")


@dataclass(frozen=True)
class Event:
    """One surgery.  faces are 1-based positions at the event, pre-surgery
    for collapses and post-insertion for creations.  delta is the chord
    imbalance of the first vanished face for collapses and the prescribed
    wall velocity for creations."""

    kind: str
    t: float
    faces: tuple[int, ...]
    pre_slope_idx: tuple[int, ...]
    post_slope_idx: tuple[int, ...]
    delta: float
    note: str = ""

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "t": self.t,
            "faces": list(self.faces),
            "pre_slope_idx": list(self.pre_slope_idx),
            "post_slope_idx": list(self.post_slope_idx),
            "delta": self.delta if math.isfinite(self.delta) else None,
            "note": self.note,
        }


@dataclass
class Trajectory:
    snapshots: list[tuple[float, Profile]]
    monitors: list[tuple]  # (t, energy, ux2_mass, max_ut, max_u, n_faces)
    events: list[Event]
    final: Profile
    t_final: float
    n_steps: int
    n_rejected: int

    MONITOR_COLUMNS = ("t", "energy", "ux2_mass", "max_ut", "max_u", "n_faces")


# ---------------------------------------------------------------------------
# single smooth step


def _pack(profile: Profile) -> np.ndarray:
    return np.concatenate([profile.corners[1:-1], [profile.left_value]])


def _unpack(profile: Profile, z: np.ndarray) -> Profile:
    corners = np.empty(len(z) + 1)
    corners[0] = 0.0
    corners[1:-1] = z[:-1]
    corners[-1] = 1.0
    return replace(profile, corners=corners, left_value=float(z[-1]))


def _rk4(profile: Profile, model: FlowModel, bc: BoundaryCondition, t: float, dt: float) -> Profile:
    def f(tt: float, zz: np.ndarray) -> np.ndarray:
        rv = assemble_rates(_unpack(profile, zz), model, bc, tt)
        return np.concatenate([rv.corner_velocities, [rv.left_value_rate]])

    z0 = _pack(profile)
    k1 = f(t, z0)
    k2 = f(t + 0.5 * dt, z0 + (0.5 * dt) * k1)
    k3 = f(t + 0.5 * dt, z0 + (0.5 * dt) * k2)
    k4 = f(t + dt, z0 + dt * k3)
    out = _unpack(profile, z0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    if float(out.lengths().min()) < -1e-15:
        raise StepRejected("step produced a negative face length")
    return out


# ---------------------------------------------------------------------------
# event location


def _bisect_step(crossed: Callable[[float], bool], dt: float, tol: float) -> float:
    """Smallest step (within tol) at which `crossed` flips; crossed(dt) holds."""
    lo, hi = 0.0, dt
    for _ in range(200):
        if hi - lo <= tol:
            return hi
        mid = 0.5 * (lo + hi)
        if crossed(mid):
            hi = mid
        else:
            lo = mid
    raise EventLocalizationError(f"event bracket stuck at [{lo!r}, {hi!r}] after 200 bisections")


def _first_sign_change(f: Callable[[float], float], t0: float, t1: float, tol: float) -> float | None:
    """Leftmost zero of f in (t0, t1], to absolute tolerance tol, else None.

    Sampling at nine points bounds how wiggly f may be between steps; the
    prescribed wall data this guards is smooth and slowly oscillating.
    """

    def sgn(v: float) -> int:
        return 0 if v == 0.0 else (1 if v > 0.0 else -1)

    ts = np.linspace(t0, t1, 9)
    prev_t = float(ts[0])
    prev_s = sgn(float(f(prev_t)))
    for tk in ts[1:]:
        tk = float(tk)
        s = sgn(float(f(tk)))
        if s == 0:
            return tk
        if prev_s != 0 and s != prev_s:
            lo, hi = prev_t, tk
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                sm = sgn(float(f(mid)))
                if sm == 0:
                    return mid
                if sm == prev_s:
                    lo = mid
                else:
                    hi = mid
            return hi
        prev_t, prev_s = tk, s
    return None


def _max_wall_demand(profile: Profile, model: FlowModel, bc: BoundaryCondition, t: float) -> float:
    g = ghost_extension(profile, model, bc, t)
    best = -math.inf
    if g.feasible_left and math.isfinite(g.monitor_left):
        best = max(best, g.monitor_left)
    if g.feasible_right and math.isfinite(g.monitor_right):
        best = max(best, g.monitor_right)
    return best


# ---------------------------------------------------------------------------
# surgeries


def _clamp_run(corners: np.ndarray, start: int, stop: int, n: int) -> None:
    """Force faces start..stop-1 to exact zero length, in place."""
    if start == 0:
        corners[1 : stop + 1] = 0.0
    elif stop == n:
        corners[start:n] = 1.0
    else:
        mid = 0.5 * (corners[start] + corners[stop])
        corners[start : stop + 1] = mid


def _apply_collapses(
    profile: Profile,
    model: FlowModel,
    bc: BoundaryCondition,
    t: float,
    shrunk: np.ndarray,
    ctol: float,
    events: list[Event],
    history: deque,
) -> Profile:
    lengths = profile.lengths()
    idx = profile.slope_idx
    n = profile.n_faces
    hits = np.where((lengths <= ctol) & shrunk)[0]
    if len(hits) == 0:
        raise StepRejected("collapse event evaporated after localization")

    try:
        deltas = assemble_rates(profile, model, bc, t).deltas
    except StepRejected:
        deltas = np.full(n, np.nan)

    runs: list[tuple[int, int]] = []
    start = int(hits[0])
    prev = start
    for h in hits[1:]:
        if int(h) == prev + 1:
            prev = int(h)
        else:
            runs.append((start, prev + 1))
            start = prev = int(h)
    runs.append((start, prev + 1))

    def dump() -> list[dict]:
        return [p.to_json_dict(tt) for tt, p in history]

    corners = profile.corners.copy()
    for a, b in runs:
        width = b - a
        at_wall = a == 0 or b == n
        if width > 2 or width == n:
            raise UnsupportedCollapse(
                f"{width} adjacent faces vanished together at t={t!r}", history=dump()
            )
        if at_wall and isinstance(bc, ConstantNeumann):
            # the fixed-slope closure keeps wall faces alive; reaching here
            # means the dynamics was violated, not that surgery is needed
            raise UnsupportedCollapse(f"a pinned-slope wall face vanished at t={t!r}", history=dump())
        if at_wall:
            kind = "collapse-case-i" if width == 1 else "collapse-case-ii"
            post = (int(idx[b]),) if a == 0 else (int(idx[a - 1]),)
        elif width == 1:
            kind = "collapse-case-i"
            post = (int(idx[a - 1]),)
        else:
            kind = "collapse-case-ii"
            post = (int(idx[a - 1]), int(idx[b]))
        worst = a + int(np.argmax(np.nan_to_num(np.abs(deltas[a:b]), nan=-1.0)))
        events.append(
            Event(
                kind=kind,
                t=t,
                faces=tuple(range(a + 1, b + 1)),
                pre_slope_idx=tuple(int(j) for j in idx[a:b]),
                post_slope_idx=post,
                delta=float(deltas[worst]),
                note="boundary" if at_wall else "",
            )
        )
        _clamp_run(corners, a, b, n)
    profile = replace(profile, corners=corners)

    # right-to-left so earlier runs keep their indices; a freshly inserted
    # zero-length wall face is not part of any run and stays untouched
    try:
        for a, b in reversed(runs):
            if a == 0:
                for _ in range(b - a):
                    profile = merge_collapsed(profile, 1)
            elif b == n:
                for _ in range(b - a):
                    profile = merge_collapsed(profile, profile.n_faces)
            else:
                profile = merge_collapsed(profile, a + 1)  # pair handled in one call
    except UnsupportedCollapse as exc:
        raise UnsupportedCollapse(str(exc), history=dump()) from None
    validate_or_raise(profile, allow_zero_faces=True)
    return profile


def _creation_slope(profile: Profile, side: str, case: str) -> int:
    idx = profile.slope_idx
    if side == "left":
        i0, i1 = int(idx[0]), int(idx[1])
    else:
        i0, i1 = int(idx[-1]), int(idx[-2])
    return i1 if case == "i" else 2 * i0 - i1


def _create(
    profile: Profile,
    bc: GeneralDirichlet,
    t: float,
    side: str,
    case: str,
    note: str,
) -> tuple[Profile, Event]:
    new_idx = _creation_slope(profile, side, case)
    rate = float(bc.a_prime(t)) if side == "left" else float(bc.b_prime(t))
    old_end = int(profile.slope_idx[0] if side == "left" else profile.slope_idx[-1])
    out = insert_boundary_face(profile, side, new_idx)
    position = 1 if side == "left" else out.n_faces
    ev = Event(
        kind=f"creation-case-{case}",
        t=t,
        faces=(position,),
        pre_slope_idx=(old_end,),
        post_slope_idx=(int(new_idx),),
        delta=rate,
        note=note,
    )
    return out, ev


# ---------------------------------------------------------------------------
# compatibility of initial data with the wall behavior


def _check_compatible(profile: Profile, bc: BoundaryCondition) -> None:
    vals = profile.corner_values()
    scale = max(1.0, float(np.max(np.abs(vals))))
    if isinstance(bc, HomogeneousDirichlet):
        if abs(vals[0]) > 1e-9 * scale or abs(vals[-1]) > 1e-9 * scale:
            raise InvalidProfile("wall values must vanish for pinned-zero walls")
    elif isinstance(bc, ConstantNeumann):
        s = profile.slopes()
        if abs(s[0] - bc.a) > 1e-12 or abs(s[-1] - bc.b) > 1e-12:
            raise InvalidProfile(
                f"end faces carry slopes ({s[0]!r}, {s[-1]!r}) but the walls fix ({bc.a!r}, {bc.b!r})"
            )
    elif isinstance(bc, GeneralDirichlet):
        a0, b0 = float(bc.a(0.0)), float(bc.b(0.0))
        if abs(vals[0] - a0) > 1e-9 * scale or abs(vals[-1] - b0) > 1e-9 * scale:
            raise InvalidProfile("initial wall values differ from the prescribed wall data at t = 0")
        # the rate callables must actually differentiate the value callables
        h = 1e-6
        for name, f, fp in (("a", bc.a, bc.a_prime), ("b", bc.b, bc.b_prime)):
            fd = (float(f(h)) - float(f(0.0))) / h
            rate = float(fp(0.0))
            if abs(fd - rate) > 1e-3 * max(1.0, abs(rate)):
                raise ConfigError(f"{name}_prime(0) = {rate!r} disagrees with a finite difference of {name} ({fd!r})")


# ---------------------------------------------------------------------------
# main loop


def _monitor_row(t: float, profile: Profile, model: FlowModel, rv) -> tuple:
    lengths = profile.lengths()
    slopes = profile.slopes()
    return (
        t,
        float(total_energy(model.wbar, profile)),
        float(np.dot(slopes * slopes, lengths)),
        float(np.max(rv.face_velocities)),
        float(np.max(profile.corner_values())),
        profile.n_faces,
    )


def run(profile: Profile, model: FlowModel, bc: BoundaryCondition, options: IntegratorOptions) -> Trajectory:
    """Evolve an admissible profile to options.t_end."""
    validate_or_raise(profile)
    _check_compatible(profile, bc)
    t_end = float(options.t_end)
    dt_max = options.dt_max if options.dt_max is not None else 1e-3 * t_end
    ctol = (
        options.collapse_tol
        if options.collapse_tol is not None
        else 1e-10 * float(profile.lengths().min())
    )
    etol = options.event_time_tol if options.event_time_tol is not None else 1e-12 * t_end
    moving_wall = isinstance(bc, GeneralDirichlet)

    pending = (
        deque(sorted(float(s) for s in options.snapshot_times))
        if options.snapshot_times is not None
        else deque()
    )
    snapshots: list[tuple[float, Profile]] = []
    monitors: list[tuple] = []
    events: list[Event] = []
    history: deque = deque(maxlen=3)
    history.append((0.0, profile))

    t = 0.0
    steps = rejected = 0
    last_surgery_t = -math.inf

    while True:
        if steps > options.max_steps:
            raise StepRejected(f"exceeded {options.max_steps} steps at t={t!r}")
        while pending and pending[0] <= t + 0.5 * etol:
            snapshots.append((pending.popleft(), profile))

        rv = assemble_rates(profile, model, bc, t)
        monitors.append(_monitor_row(t, profile, model, rv))
        if options.observer is not None:
            options.observer(t, profile)

        if moving_wall and profile.n_faces >= 2:
            note = "post-collapse" if abs(t - last_surgery_t) <= etol else ""
            g = rv.ghost
            surgery = None
            if not g.feasible_left:
                surgery = ("left", "i")
            elif not g.feasible_right:
                surgery = ("right", "i")
            elif g.feasible_left and g.monitor_left > 1.0 + R_SLACK:
                surgery = ("left", "ii")
            elif g.feasible_right and g.monitor_right > 1.0 + R_SLACK:
                surgery = ("right", "ii")
            if surgery is not None:
                profile, ev = _create(profile, bc, t, surgery[0], surgery[1], note)
                events.append(ev)
                last_surgery_t = t
                history.append((t, profile))
                continue

        if t >= t_end - 0.5 * etol:
            break

        cand = [dt_max, t_end - t]
        if pending:
            cand.append(pending[0] - t)
        lengths = profile.lengths()
        ld = rv.length_rates
        shrinking = (ld < 0.0) & (lengths > 10.0 * ctol)
        if shrinking.any():
            cand.append(options.safety * float(np.min(lengths[shrinking] / -ld[shrinking])))
        dt = max(min(cand), etol)
        if moving_wall:
            for f in (bc.a_prime, bc.b_prime):
                z = _first_sign_change(f, t, t + dt, 1e-10)
                if z is not None:
                    dt = max(min(dt, z - t), etol)

        trial = None
        for _ in range(options.max_halvings + 1):
            try:
                trial = _rk4(profile, model, bc, t, dt)
                break
            except StepRejected:
                rejected += 1
                dt *= 0.5
        if trial is None:
            raise StepRejected(f"step size collapsed to {dt!r} at t={t!r}")

        start_l = lengths

        def collapse_crossed(d: float) -> bool:
            try:
                p = _rk4(profile, model, bc, t, d)
            except StepRejected:
                return True
            ln = p.lengths()
            return bool(np.any((ln <= ctol) & (ln < start_l)))

        ev_dt = None
        ev_kind = None
        trial_l = trial.lengths()
        if np.any((trial_l <= ctol) & (trial_l < start_l)):
            ev_dt, ev_kind = _bisect_step(collapse_crossed, dt, etol), "collapse"

        if moving_wall:
            m_trial = _max_wall_demand(trial, model, bc, t + dt)
            if m_trial > 1.0 + R_SLACK:
                m_now = _max_wall_demand(profile, model, bc, t)
                if m_now > 1.0:
                    mc = 0.0
                else:

                    def demand_crossed(d: float) -> bool:
                        try:
                            p = _rk4(profile, model, bc, t, d)
                        except StepRejected:
                            return True
                        return _max_wall_demand(p, model, bc, t + d) > 1.0

                    mc = _bisect_step(demand_crossed, dt, etol)
                if ev_dt is None or mc < ev_dt:
                    ev_dt, ev_kind = mc, "demand"

        if ev_dt is None:
            profile = trial
            t += dt
            steps += 1
            history.append((t, profile))
            continue

        if ev_dt > 0.0:
            profile = _rk4(profile, model, bc, t, ev_dt)
            t += ev_dt
        steps += 1
        if ev_kind == "collapse":
            shrunk = profile.lengths() < start_l
            profile = _apply_collapses(profile, model, bc, t, shrunk, ctol, events, history)
            last_surgery_t = t
            # every boundary surgery displaces the wall value by up to ctol,
            # so a partner face of a simultaneous collapse can land a notch
            # above the threshold and freeze there; merge any face already
            # inside the step controller's 10 ctol horizon that is not
            # growing and is structurally removable (wall faces of a moving
            # or pinned-slope wall stay: a newborn may legitimately sit at
            # zero, and pinned faces must never vanish)
            sweep_tol = 10.0 * ctol
            while profile.n_faces > 1:
                rv_post = assemble_rates(profile, model, bc, t)
                ln_post = profile.lengths()
                idx_post = profile.slope_idx
                stuck = (ln_post <= sweep_tol) & (rv_post.length_rates <= 0.0)
                for k in np.where(stuck)[0]:
                    if k == 0 or k == profile.n_faces - 1:
                        removable = isinstance(bc, HomogeneousDirichlet)
                    else:
                        removable = idx_post[k - 1] == idx_post[k + 1]
                    if not removable:
                        stuck[k] = False
                if not stuck.any():
                    break
                profile = _apply_collapses(profile, model, bc, t, stuck, sweep_tol, events, history)
        else:
            g = ghost_extension(profile, model, bc, t)
            ml = g.monitor_left if g.feasible_left and math.isfinite(g.monitor_left) else -math.inf
            mr = g.monitor_right if g.feasible_right and math.isfinite(g.monitor_right) else -math.inf
            side = "left" if ml >= mr else "right"
            profile, ev = _create(profile, bc, t, side, "ii", "")
            events.append(ev)
            last_surgery_t = t
        history.append((t, profile))

    while pending and pending[0] <= t_end + 0.5 * etol:
        snapshots.append((pending.popleft(), profile))

    return Trajectory(
        snapshots=snapshots,
        monitors=monitors,
        events=events,
        final=profile,
        t_final=t,
        n_steps=steps,
        n_rejected=rejected,
    )


# ---------------------------------------------------------------------------
# writers (17 significant digits: values survive a text round trip)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_snapshots_csv(trajectory: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "face_index", "x_left", "x_right", "slope"])
        for t, prof in trajectory.snapshots:
            for i, xl, xr, s, _ in prof.to_csv_rows():
                w.writerow([_fmt(t), i, _fmt(xl), _fmt(xr), _fmt(s)])


def write_monitors_csv(trajectory: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(Trajectory.MONITOR_COLUMNS))
        for row in trajectory.monitors:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def write_events_jsonl(trajectory: Trajectory, path) -> None:
    with open(path, "w") as fh:
        for ev in trajectory.events:
            fh.write(json.dumps(ev.to_json_dict()) + "\n")
