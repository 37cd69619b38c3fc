"""Config schema and the batch front end."""

import json
import math

import numpy as np
import pytest

from crystalflow import (
    ConfigError,
    ConstantNeumann,
    GeneralDirichlet,
    HomogeneousDirichlet,
    build_problem,
    parse_config,
)
from crystalflow.cli import main

MINIMAL = {
    "energy": "quadratic",
    "mode": "heat",
    "grid": {"lo": -4, "hi": 4, "m": 0.25},
    "initial": "sine",
    "bc": "dirichlet0",
    "t_end": 0.2,
}


def doc(**overrides) -> str:
    d = dict(MINIMAL)
    d.update(overrides)
    return json.dumps(d)


# ---------------------------------------------------------------------------
# parsing


def test_minimal_document_fills_defaults():
    cfg = parse_config(doc())
    assert cfg.energy == "quadratic"
    assert cfg.mode == "heat"
    assert cfg.grid.m == 0.25 and cfg.grid.uniform
    assert cfg.initial == {"name": "sine", "amplitude": 1.0}
    assert cfg.bc == {"kind": "dirichlet0"}
    assert cfg.snapshots == 50 and cfg.out_dir == "out" and cfg.seed == 0
    ts = cfg.snapshot_times()
    assert ts[0] == 0.0 and ts[-1] == 0.2 and len(ts) == 50


@pytest.mark.parametrize(
    "mangle, fragment",
    [
        (dict(extra=1), "$.extra: unknown key"),
        (dict(t_end=None), "$.t_end"),
        (dict(t_end=-0.5), "$.t_end"),
        (dict(mode="frost"), "$.mode"),
        (dict(energy="cubic"), "$.energy"),
        (dict(grid={"lo": 4, "hi": -4, "m": 0.25}), "$.grid.hi"),
        (dict(grid={"lo": -4, "hi": 4, "m": 0}), "$.grid.m"),
        (dict(grid={"slopes": [1.0, 0.5]}), "$.grid.slopes"),
        (dict(grid={"slopes": [0.0, 0.5], "uniform": True}), "$.grid.uniform"),
        (dict(initial={"name": "sine", "amplitude": 0}), "$.initial.amplitude"),
        (dict(initial={"name": "custom", "samples": [[0, 0], [1, 0]]}), "$.initial.samples"),
        (dict(initial={"name": "custom", "samples": [[0, 0], [0.7, 1], [0.3, 1], [1, 0]]}), "$.initial.samples"),
        (dict(bc="periodic"), "$.bc"),
        (dict(bc={"kind": "neumann", "a": -1}), "$.bc.b"),
        (dict(bc={"kind": "dirichlet", "a": {"const": 0, "freq": 1}, "b": {"const": 0}}), "$.bc.a.freq"),
        (dict(snapshots=1), "$.snapshots"),
        (dict(seed=-1), "$.seed"),
    ],
)
def test_rejections_carry_the_json_path(mangle, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config(doc(**mangle))
    assert fragment in str(exc.value)


def test_malformed_json_is_a_config_error():
    with pytest.raises(ConfigError, match="malformed JSON"):
        parse_config("{not json")


def test_heat_mode_requires_the_quadratic_energy():
    with pytest.raises(ConfigError, match="quadratic"):
        parse_config(doc(energy="area"))
    with pytest.raises(ConfigError, match="quadratic"):
        parse_config(doc(energy={"a0": 1.0, "cos": [0.05]}))


def test_with_m_swaps_only_the_fineness():
    cfg = parse_config(doc())
    fine = cfg.with_m(0.05)
    assert fine.grid.m == 0.05
    assert fine.grid.lo == cfg.grid.lo and fine.t_end == cfg.t_end
    explicit = parse_config(doc(grid={"slopes": [-1.0, 0.0, 0.25, 1.0]}))
    assert not explicit.grid.uniform
    with pytest.raises(ConfigError, match="uniform"):
        explicit.with_m(0.1)


# ---------------------------------------------------------------------------
# materialization


def test_build_problem_minimal():
    pb = build_problem(parse_config(doc()))
    assert isinstance(pb.bc, HomogeneousDirichlet)
    assert pb.angular is None
    assert pb.u0(0.5) == pytest.approx(1.0)
    assert pb.du0(0.5) == pytest.approx(0.0, abs=1e-15)
    assert abs(pb.profile.corner_values()[-1]) < 1e-12


def test_build_problem_neumann_pins_walls():
    cfg = parse_config(doc(bc={"kind": "neumann", "a": 0.5, "b": -0.5},
                           initial={"name": "sine", "amplitude": 0.1}))
    pb = build_problem(cfg)
    assert isinstance(pb.bc, ConstantNeumann)
    s = pb.profile.slopes()
    assert s[0] == 0.5 and s[-1] == -0.5


def test_build_problem_moving_walls():
    cfg = parse_config(doc(
        bc={"kind": "dirichlet", "a": {"const": 0.1, "amp": 0.05, "omega": 3.0}, "b": {"const": 0.0}},
        initial={"name": "parabola", "amplitude": 0.2},
    ))
    pb = build_problem(cfg)
    assert isinstance(pb.bc, GeneralDirichlet)
    assert pb.bc.a(0.0) == pytest.approx(0.1)
    assert pb.bc.a(0.4) == pytest.approx(0.1 + 0.05 * math.sin(1.2))
    assert pb.bc.a_prime(0.4) == pytest.approx(0.15 * math.cos(1.2))
    assert pb.bc.b(7.0) == 0.0 and pb.bc.b_prime(7.0) == 0.0


def test_build_problem_fourier_energy():
    cfg = parse_config(doc(mode="curvature", energy={"a0": 1.0, "cos": [0.0, 0.05], "sin": [0.02]}))
    pb = build_problem(cfg)
    assert pb.angular is not None
    th = 1.1
    assert pb.angular.f(th) == pytest.approx(1.0 + 0.05 * math.cos(2 * th) + 0.02 * math.sin(th))


def test_hat_needs_adjacent_unit_slopes():
    cfg = parse_config(doc(initial="hat", grid={"lo": -2, "hi": 2, "m": 1}))
    pb = build_problem(cfg)
    assert pb.profile.n_faces == 3 and pb.u0 is None
    with pytest.raises(ConfigError, match="adjacent"):
        build_problem(parse_config(doc(initial="hat", grid={"slopes": [-1, -0.5, 0, 0.5, 1]})))
    with pytest.raises(ConfigError, match="hat"):
        build_problem(parse_config(doc(initial="hat", grid={"lo": -2, "hi": 2, "m": 0.8})))


def test_custom_initial_goes_through_a_spline():
    samples = [[0.0, 0.0], [0.25, 0.2], [0.5, 0.3], [0.75, 0.2], [1.0, 0.0]]
    cfg = parse_config(doc(initial={"name": "custom", "samples": samples}))
    pb = build_problem(cfg)
    assert pb.u0(0.5) == pytest.approx(0.3)
    assert abs(pb.profile.corner_values()[-1]) < 1e-12


# ---------------------------------------------------------------------------
# command line


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    d = tmp_path / "artifacts"
    monkeypatch.setenv("CRYSTAL_OUT", str(d))
    return d


def write_cfg(tmp_path, name="cfg.json", **overrides):
    p = tmp_path / name
    p.write_text(doc(**overrides))
    return str(p)


FAST = dict(grid={"lo": -4, "hi": 4, "m": 0.4}, t_end=0.02, snapshots=5)


def test_cli_run_writes_the_artifact_set(tmp_path, outdir, capsys):
    rc = main(["run", write_cfg(tmp_path, **FAST)])
    assert rc == 0
    for name in ("snapshots.csv", "monitors.csv", "events.jsonl", "final_profile.json", "snapshots.svg"):
        assert (outdir / name).exists(), name
    assert "faces ->" in capsys.readouterr().out
    final = json.loads((outdir / "final_profile.json").read_text())
    assert final["t"] == pytest.approx(0.02)


def test_cli_run_is_deterministic(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, **FAST)
    outs = []
    for sub in ("a", "b"):
        monkeypatch.setenv("CRYSTAL_OUT", str(tmp_path / sub))
        assert main(["run", cfg]) == 0
        outs.append((tmp_path / sub / "monitors.csv").read_bytes())
    assert outs[0] == outs[1]


def test_cli_validate_reports_fit(tmp_path, capsys):
    assert main(["validate", write_cfg(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "config ok" in out and "fit:" in out


def test_cli_converge_produces_rate_artifacts(tmp_path, outdir, capsys):
    rc = main(["converge", write_cfg(tmp_path, **FAST), "--m", "0.4,0.2,0.1"])
    assert rc == 0
    rate = json.loads((outdir / "rate.json").read_text())["rate"]
    assert 0.8 < rate < 1.3  # first order in the fineness, heat sine
    lines = (outdir / "convergence.csv").read_text().splitlines()
    assert lines[0] == "m,N0,t,l2_u,l2_ux,h1"
    assert len(lines) == 1 + 3 * 5
    assert "fitted rate" in capsys.readouterr().out


def test_cli_energy_report(tmp_path, outdir):
    cfg = write_cfg(tmp_path, mode="curvature", energy={"a0": 1.0, "cos": [0.0, 0.04]})
    assert main(["energy", cfg]) == 0
    rep = json.loads((outdir / "energy_report.json").read_text())
    assert rep["stability_margin"] > 0
    assert rep["c1"] > 0 and rep["c2"] > 0 and rep["c3"] >= 0
    assert (outdir / "frank.svg").exists() and (outdir / "wulff.svg").exists()


@pytest.mark.parametrize(
    "argv_factory, rc",
    [
        (lambda t: ["run", str(t / "missing.json")], 2),
        (lambda t: ["validate", write_cfg(t, name="bad.json", extra=1)], 2),
        (lambda t: ["energy", write_cfg(t)], 2),  # builtin energy has no diagnostics
        (lambda t: ["converge", write_cfg(t, **FAST), "--m", "0.4,0.2"], 2),
        (lambda t: ["converge", write_cfg(t, **FAST), "--m", "0.1,0.2,0.4"], 2),
        (lambda t: ["converge", write_cfg(t, **FAST), "--m", "0.4,zap,0.1"], 2),
    ],
)
def test_cli_config_errors_exit_two(tmp_path, outdir, capsys, argv_factory, rc):
    assert main(argv_factory(tmp_path)) == rc
    assert "config error" in capsys.readouterr().err


def test_cli_run_failure_exits_one(tmp_path, outdir, capsys):
    # pinned slopes sit at the edge of a three-slope grid: the mirrored ghost
    # falls off and the simulation aborts
    cfg = write_cfg(
        tmp_path,
        grid={"lo": -0.5, "hi": 0.5, "m": 0.5},
        initial={"name": "sine", "amplitude": 0.1},
        bc={"kind": "neumann", "a": 0.5, "b": -0.5},
        t_end=0.01,
    )
    assert main(["validate", cfg]) == 0  # statically fine
    assert main(["run", cfg]) == 1
    assert "run failed" in capsys.readouterr().err


def test_cli_out_dir_override(tmp_path, monkeypatch):
    monkeypatch.delenv("CRYSTAL_OUT", raising=False)
    cfg = write_cfg(tmp_path, out_dir=str(tmp_path / "from_config"), **FAST)
    assert main(["run", cfg]) == 0
    assert (tmp_path / "from_config" / "monitors.csv").exists()
    monkeypatch.setenv("CRYSTAL_OUT", str(tmp_path / "override"))
    assert main(["run", cfg]) == 0
    assert (tmp_path / "override" / "monitors.csv").exists()
