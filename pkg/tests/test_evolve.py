"""Event-aware integration: stepping, collapses, creations, output files."""

import json
import math

import numpy as np
import pytest

from crystalflow import (
    ConstantNeumann,
    FlowModel,
    GeneralDirichlet,
    HomogeneousDirichlet,
    IntegratorOptions,
    InvalidProfile,
    Profile,
    area_energy,
    build_initial,
    build_slope_grid,
    quadratic_energy,
    run,
    validate,
    write_events_jsonl,
    write_monitors_csv,
    write_snapshots_csv,
)
from crystalflow.evolve import Event


def heat_model(grid):
    return FlowModel.from_smooth(quadratic_energy(), grid, mode="heat")


def valley(grid, corners):
    """M-shaped graph: up, flat, down into a valley, flat, up to the wall."""
    return Profile(grid=grid, corners=corners, slope_idx=[3, 2, 1, 2, 3], left_value=0.0)


# ---------------------------------------------------------------------------
# smooth stepping


def test_rk4_self_convergence_is_fourth_order(hat):
    model = heat_model(hat.grid)
    bc = HomogeneousDirichlet()
    T = 0.02  # event-free window: the first wall collapse is much later

    def final_corners(dt):
        traj = run(hat, model, bc, IntegratorOptions(t_end=T, dt_max=dt))
        return traj.final.corners

    ref = final_corners(T / 256)
    errs = [float(np.max(np.abs(final_corners(T / k) - ref))) for k in (4, 8, 16)]
    assert errs[0] > errs[1] > errs[2] > 0
    assert errs[0] / errs[1] > 12.0
    assert errs[1] / errs[2] > 12.0


def test_dt_max_is_honored(hat):
    traj = run(hat, heat_model(hat.grid), HomogeneousDirichlet(), IntegratorOptions(t_end=0.01, dt_max=1e-4))
    assert traj.n_steps >= 100
    assert traj.t_final == pytest.approx(0.01)


def test_options_validation():
    with pytest.raises(InvalidProfile):
        IntegratorOptions(t_end=-1.0)
    with pytest.raises(InvalidProfile):
        IntegratorOptions(t_end=1.0, safety=0.0)
    with pytest.raises(InvalidProfile):
        IntegratorOptions(t_end=1.0, dt_max=-0.1)


def test_observer_sees_every_accepted_state(hat):
    seen = []
    run(
        hat,
        heat_model(hat.grid),
        HomogeneousDirichlet(),
        IntegratorOptions(t_end=0.01, observer=lambda t, p: seen.append(t)),
    )
    assert seen[0] == 0.0
    assert seen[-1] == pytest.approx(0.01)
    assert all(b >= a for a, b in zip(seen, seen[1:]))


# ---------------------------------------------------------------------------
# collapse events

# the valley with lengths (.15, .3, .2, .3, .05) under the heat variant has
# closed-form face lengths: the flats grow as sqrt(l0^2 + 4t), so the right
# wall face dies at t = (0.4^2 - 0.3^2)/4 = 0.0175 and the left wall face
# and the valley face vanish together at (0.6^2 - 0.4^2)/4 = 0.0675, leaving
# the flat zero state exactly


def test_valley_extinction_times_and_final_state(grid_unit):
    p = valley(grid_unit, [0.0, 0.15, 0.45, 0.65, 0.95, 1.0])
    traj = run(p, heat_model(grid_unit), HomogeneousDirichlet(), IntegratorOptions(t_end=0.1))

    assert [ev.kind for ev in traj.events] == ["collapse-case-i"] * 3
    assert traj.events[0].t == pytest.approx(0.0175, abs=1e-8)
    assert traj.events[0].faces == (5,)
    assert traj.events[0].note == "boundary"
    assert traj.events[1].t == pytest.approx(0.0675, abs=1e-8)
    assert traj.events[2].t == pytest.approx(0.0675, abs=1e-8)
    for ev in traj.events:
        assert abs(ev.delta) <= 1e-8

    f = traj.final
    assert f.n_faces == 1
    assert f.slopes().tolist() == [0.0]
    assert float(np.max(np.abs(f.corner_values()))) == 0.0
    assert traj.t_final == pytest.approx(0.1)

    mon = np.array([r[:5] for r in traj.monitors])
    assert np.all(np.diff(mon[:, 1]) <= 1e-12)  # energy
    assert np.all(np.diff(mon[:, 4]) <= 1e-12)  # max corner value


def test_symmetric_valley_collapses_in_one_pass(grid_unit):
    # both wall faces and the valley face vanish at the same instant; the
    # event handler must resolve all of it without wedging
    p = valley(grid_unit, [0.0, 0.2, 0.3, 0.7, 0.8, 1.0])
    traj = run(p, heat_model(grid_unit), HomogeneousDirichlet(), IntegratorOptions(t_end=0.1))
    ts = [ev.t for ev in traj.events]
    assert len(ts) == 3
    assert max(ts) - min(ts) < 1e-9
    assert ts[0] == pytest.approx(0.06, abs=1e-8)
    notes = sorted(ev.note for ev in traj.events)
    assert notes == ["", "boundary", "boundary"]
    assert traj.final.n_faces == 1
    assert float(np.max(np.abs(traj.final.corner_values()))) == 0.0


def test_neumann_valley_coarsens_to_pinned_plane(grid_unit):
    p = valley(grid_unit, [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    traj = run(p, heat_model(grid_unit), ConstantNeumann(a=1.0, b=1.0), IntegratorOptions(t_end=0.5))
    assert all(ev.kind == "collapse-case-i" and ev.note == "" for ev in traj.events)
    assert len(traj.events) == 2
    f = traj.final
    assert f.n_faces == 1
    assert f.slopes().tolist() == [1.0]
    # the surviving pinned face is stationary
    assert traj.t_final == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# creation events


def test_oscillating_wall_creates_case_i_at_reversals(hat):
    # dwall/dt > 0 at t = 0 fights the hat's rising left edge: a face is
    # created immediately, then again at every velocity reversal
    w = 8 * math.pi
    bc = GeneralDirichlet(
        a=lambda t: 0.05 * math.sin(w * t),
        a_prime=lambda t: 0.05 * w * math.cos(w * t),
        b=lambda t: 0.0,
        b_prime=lambda t: 0.0,
    )
    model = FlowModel.from_smooth(area_energy(), hat.grid)
    bad = []
    traj = run(
        hat, model, bc,
        IntegratorOptions(t_end=0.25, observer=lambda t, p: bad.extend(validate(p, allow_zero_faces=True))),
    )
    assert bad == []
    creations = [ev for ev in traj.events if ev.kind == "creation-case-i"]
    assert [ev.t for ev in creations] == pytest.approx([0.0, 0.0625, 0.1875], abs=1e-7)
    for ev in creations:
        assert len(ev.post_slope_idx) == 1
    # the wall value is tracked through all surgeries
    assert traj.final.left_value == pytest.approx(0.05 * math.sin(w * 0.25), abs=1e-9)
    assert any(ev.kind == "collapse-case-i" for ev in traj.events)


def test_overdemanding_wall_creates_case_ii_immediately(grid_unit):
    # the end face can deliver at most delta/length; demanding more at t = 0
    # forces a steeper newborn face at once
    p = Profile(grid=grid_unit, corners=[0.0, 0.5, 1.0], slope_idx=[2, 3], left_value=0.0)
    bc = GeneralDirichlet(
        a=lambda t: 2 * math.sin(t),
        a_prime=lambda t: 2 * math.cos(t),
        b=lambda t: 0.5,
        b_prime=lambda t: 0.0,
    )
    model = FlowModel.from_smooth(area_energy(), grid_unit)
    traj = run(p, model, bc, IntegratorOptions(t_end=0.02))
    first = traj.events[0]
    assert first.kind == "creation-case-ii"
    assert first.t == 0.0
    assert first.post_slope_idx == (1,)  # mirror of the (0, 1) end run
    assert traj.final.left_value == pytest.approx(2 * math.sin(0.02), abs=1e-10)


# ---------------------------------------------------------------------------
# output files


def test_snapshots_align_with_requested_times(hat):
    times = tuple(np.linspace(0.0, 0.01, 6))
    traj = run(hat, heat_model(hat.grid), HomogeneousDirichlet(),
               IntegratorOptions(t_end=0.01, snapshot_times=times))
    assert [t for t, _ in traj.snapshots] == pytest.approx(list(times), abs=1e-12)
    assert traj.snapshots[0][1] is not traj.snapshots[-1][1]


def test_writers_produce_stable_parseable_files(tmp_path, hat):
    opts = IntegratorOptions(t_end=0.01, snapshot_times=tuple(np.linspace(0, 0.01, 4)))

    def emit(tag):
        traj = run(hat, heat_model(hat.grid), HomogeneousDirichlet(), opts)
        s, m, e = (tmp_path / f"s{tag}.csv", tmp_path / f"m{tag}.csv", tmp_path / f"e{tag}.jsonl")
        write_snapshots_csv(traj, s)
        write_monitors_csv(traj, m)
        write_events_jsonl(traj, e)
        return s.read_bytes(), m.read_bytes(), e.read_bytes(), traj

    first, second = emit(1), emit(2)
    # bitwise deterministic across runs
    assert first[0] == second[0] and first[1] == second[1] and first[2] == second[2]

    header = first[1].decode().splitlines()[0]
    assert header.split(",") == list(first[3].MONITOR_COLUMNS)
    # 17 significant digits survive the text round trip
    row1 = first[1].decode().splitlines()[1].split(",")
    assert float(row1[1]) == first[3].monitors[0][1]

    snap_header = first[0].decode().splitlines()[0]
    assert "t" in snap_header and "slope" in snap_header


def test_event_json_maps_non_finite_delta_to_null():
    ev = Event(kind="creation-case-i", t=0.5, faces=(1,), pre_slope_idx=(2,),
               post_slope_idx=(3,), delta=float("nan"), note="")
    d = ev.to_json_dict()
    assert d["delta"] is None
    assert json.dumps(d)  # serializable


def test_event_jsonl_rows_describe_surgeries(tmp_path, grid_unit):
    p = valley(grid_unit, [0.0, 0.15, 0.45, 0.65, 0.95, 1.0])
    traj = run(p, heat_model(grid_unit), HomogeneousDirichlet(), IntegratorOptions(t_end=0.1))
    path = tmp_path / "events.jsonl"
    write_events_jsonl(traj, path)
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(rows) == 3
    assert {r["kind"] for r in rows} == {"collapse-case-i"}
    assert all(set(r) == {"kind", "t", "faces", "pre_slope_idx", "post_slope_idx", "delta", "note"} for r in rows)


# ---------------------------------------------------------------------------
# a full heat relaxation keeps its monitors monotone


def test_heat_sine_monitors_and_boundary_events():
    grid = build_slope_grid(-4.0, 4.0, 0.25)
    p = build_initial(lambda x: math.sin(math.pi * x), lambda x: math.pi * math.cos(math.pi * x), grid)
    traj = run(p, heat_model(grid), HomogeneousDirichlet(), IntegratorOptions(t_end=0.05))
    mon = np.array([r[:5] for r in traj.monitors])
    assert np.all(np.diff(mon[:, 1]) <= 1e-12)  # faceted energy
    assert np.all(np.diff(mon[:, 2]) <= 1e-12)  # slope-square mass
    assert np.all(np.diff(mon[:, 4]) <= 1e-12)  # max corner value
    pos = mon[:, 3] > 0
    assert np.all(np.diff(mon[pos, 3]) <= 1e-8)  # positive max face velocity
    # the outermost faces steepen past the data and peel off at the walls
    assert traj.events
    assert all(ev.kind == "collapse-case-i" and ev.note == "boundary" for ev in traj.events)
    assert all(ev.delta == 0.0 for ev in traj.events)
