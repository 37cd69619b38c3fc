"""Run configurations: JSON text in, validated objects out.

The schema is deliberately small.  Every key is checked, unknown keys are
rejected (typos surface immediately), and every message carries the JSON
path of the offending entry.  parse_config only validates; build_problem
turns a config into the live objects a run needs.

Example, the smallest accepted document:

    {"energy": "quadratic", "mode": "heat",
     "grid": {"lo": -4, "hi": 4, "m": 0.25},
     "initial": "sine", "bc": "dirichlet0", "t_end": 0.2}

Boundary specs: "dirichlet0" pins u = 0 at both walls.  Fixed-slope walls
take {"kind": "neumann", "a": -1.0, "b": 1.0} with grid slopes a, b.
Moving walls take {"kind": "dirichlet", "a": {...}, "b": {...}} where each
side is {"const": c, "amp": e, "omega": w} meaning c + e sin(w t); amp and
omega default to 0, so {"const": 0.1} is a wall held at 0.1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .dynamics import (
    BoundaryCondition,
    ConstantNeumann,
    FlowModel,
    GeneralDirichlet,
    HomogeneousDirichlet,
)
from .energy import (
    AngularEnergy,
    SlopeGrid,
    SmoothEnergy,
    angular_from_fourier,
    angular_to_cartesian,
    area_energy,
    build_slope_grid,
    quadratic_energy,
)
from .errors import ConfigError, GridError
from .profile import Profile, build_initial

__all__ = ["GridSpec", "RunConfig", "Problem", "parse_config", "build_problem"]


@dataclass(frozen=True)
class GridSpec:
    lo: float = 0.0
    hi: float = 0.0
    m: float = 0.0
    uniform: bool = True
    slopes: tuple[float, ...] | None = None  # explicit non-uniform grid


@dataclass(frozen=True)
class RunConfig:
    energy: object  # "quadratic" | "area" | {"a0":..., "cos":[...], "sin":[...]}
    mode: str
    grid: GridSpec
    initial: dict  # {"name": ..., parameters}
    bc: dict  # {"kind": ..., parameters}
    t_end: float
    snapshots: int = 50
    out_dir: str = "out"
    seed: int = 0

    def snapshot_times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.snapshots)

    def with_m(self, m: float) -> "RunConfig":
        """Same run on a finer or coarser uniform grid; sweeps use this."""
        if self.grid.slopes is not None:
            raise ConfigError("grid.m sweeps need a uniform grid spec, not explicit slopes")
        g = GridSpec(lo=self.grid.lo, hi=self.grid.hi, m=float(m), uniform=True)
        return RunConfig(
            energy=self.energy,
            mode=self.mode,
            grid=g,
            initial=self.initial,
            bc=self.bc,
            t_end=self.t_end,
            snapshots=self.snapshots,
            out_dir=self.out_dir,
            seed=self.seed,
        )


@dataclass(frozen=True)
class Problem:
    """Live objects built from a RunConfig."""

    profile: Profile
    model: FlowModel
    bc: BoundaryCondition
    smooth: SmoothEnergy
    angular: AngularEnergy | None
    u0: Callable[[float], float] | None
    du0: Callable[[float], float] | None


# ---------------------------------------------------------------------------
# validation plumbing


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _check_keys(d: dict, path: str, required: tuple[str, ...], optional: tuple[str, ...] = ()):
    if not isinstance(d, dict):
        _fail(path, f"expected an object, got {type(d).__name__}")
    for k in d:
        if k not in required and k not in optional:
            _fail(f"{path}.{k}", "unknown key")
    for k in required:
        if k not in d:
            _fail(f"{path}.{k}", "missing required key")


def _number(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        _fail(path, f"expected a finite number, got {v!r}")
    return float(v)


def _positive(v, path: str) -> float:
    x = _number(v, path)
    if not x > 0.0:
        _fail(path, f"expected a positive number, got {v!r}")
    return x


def _integer(v, path: str, minimum: int) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(path, f"expected an integer, got {v!r}")
    if v < minimum:
        _fail(path, f"expected at least {minimum}, got {v!r}")
    return v


def _string(v, path: str, allowed: tuple[str, ...] | None = None) -> str:
    if not isinstance(v, str):
        _fail(path, f"expected a string, got {type(v).__name__}")
    if allowed is not None and v not in allowed:
        _fail(path, f"expected one of {', '.join(allowed)}; got {v!r}")
    return v


def _number_list(v, path: str) -> list[float]:
    if not isinstance(v, list) or not v:
        _fail(path, "expected a non-empty array of numbers")
    return [_number(x, f"{path}[{i}]") for i, x in enumerate(v)]


# ---------------------------------------------------------------------------
# section parsers


def _parse_energy(v, path: str):
    if isinstance(v, str):
        return _string(v, path, allowed=("quadratic", "area"))
    _check_keys(v, path, required=("a0",), optional=("cos", "sin"))
    a0 = _number(v["a0"], f"{path}.a0")
    cos = _number_list(v["cos"], f"{path}.cos") if "cos" in v else []
    sin = _number_list(v["sin"], f"{path}.sin") if "sin" in v else []
    return {"a0": a0, "cos": cos, "sin": sin}


def _parse_grid(v, path: str) -> GridSpec:
    if not isinstance(v, dict):
        _fail(path, f"expected an object, got {type(v).__name__}")
    if "slopes" in v:
        _check_keys(v, path, required=("slopes",), optional=("uniform",))
        slopes = _number_list(v["slopes"], f"{path}.slopes")
        if len(slopes) < 2 or not all(b > a for a, b in zip(slopes, slopes[1:])):
            _fail(f"{path}.slopes", "expected at least two strictly increasing slopes")
        if v.get("uniform", False):
            _fail(f"{path}.uniform", "explicit slopes are the non-uniform spec; drop the flag")
        return GridSpec(lo=slopes[0], hi=slopes[-1], m=float(np.diff(slopes).max()), uniform=False, slopes=tuple(slopes))
    _check_keys(v, path, required=("lo", "hi", "m"), optional=("uniform",))
    lo = _number(v["lo"], f"{path}.lo")
    hi = _number(v["hi"], f"{path}.hi")
    if not hi > lo:
        _fail(f"{path}.hi", f"expected hi > lo, got [{lo!r}, {hi!r}]")
    m = _positive(v["m"], f"{path}.m")
    if "uniform" in v and v["uniform"] is not True:
        _fail(f"{path}.uniform", "lo/hi/m grids are uniform; pass explicit slopes instead")
    return GridSpec(lo=lo, hi=hi, m=m, uniform=True)


def _parse_initial(v, path: str) -> dict:
    if isinstance(v, str):
        v = {"name": v}
    if not isinstance(v, dict):
        _fail(path, f"expected a string or object, got {type(v).__name__}")
    name = _string(v.get("name"), f"{path}.name", allowed=("sine", "parabola", "hat", "custom"))
    if name in ("sine", "parabola"):
        _check_keys(v, path, required=("name",), optional=("amplitude",))
        amp = _number(v.get("amplitude", 1.0), f"{path}.amplitude")
        if amp == 0.0:
            _fail(f"{path}.amplitude", "zero amplitude leaves no profile to evolve")
        return {"name": name, "amplitude": amp}
    if name == "hat":
        _check_keys(v, path, required=("name",))
        return {"name": "hat"}
    _check_keys(v, path, required=("name", "samples"))
    samples = v["samples"]
    if not isinstance(samples, list) or len(samples) < 4:
        _fail(f"{path}.samples", "expected at least 4 [x, u] pairs")
    pts = []
    for i, pair in enumerate(samples):
        if not isinstance(pair, list) or len(pair) != 2:
            _fail(f"{path}.samples[{i}]", f"expected an [x, u] pair, got {pair!r}")
        pts.append((_number(pair[0], f"{path}.samples[{i}][0]"), _number(pair[1], f"{path}.samples[{i}][1]")))
    xs = [p[0] for p in pts]
    if xs[0] != 0.0 or xs[-1] != 1.0 or not all(b > a for a, b in zip(xs, xs[1:])):
        _fail(f"{path}.samples", "abscissas must increase strictly from 0 to 1")
    return {"name": "custom", "samples": pts}


def _side_spec(v, path: str) -> dict:
    _check_keys(v, path, required=("const",), optional=("amp", "omega"))
    return {
        "const": _number(v["const"], f"{path}.const"),
        "amp": _number(v.get("amp", 0.0), f"{path}.amp"),
        "omega": _number(v.get("omega", 0.0), f"{path}.omega"),
    }


def _parse_bc(v, path: str) -> dict:
    if isinstance(v, str):
        if v != "dirichlet0":
            _fail(path, f"expected 'dirichlet0' or an object, got {v!r}")
        return {"kind": "dirichlet0"}
    if not isinstance(v, dict):
        _fail(path, f"expected a string or object, got {type(v).__name__}")
    kind = _string(v.get("kind"), f"{path}.kind", allowed=("dirichlet0", "neumann", "dirichlet"))
    if kind == "dirichlet0":
        _check_keys(v, path, required=("kind",))
        return {"kind": "dirichlet0"}
    _check_keys(v, path, required=("kind", "a", "b"))
    if kind == "neumann":
        return {"kind": "neumann", "a": _number(v["a"], f"{path}.a"), "b": _number(v["b"], f"{path}.b")}
    return {"kind": "dirichlet", "a": _side_spec(v["a"], f"{path}.a"), "b": _side_spec(v["b"], f"{path}.b")}


def parse_config(text: str) -> RunConfig:
    """Validated RunConfig from JSON text, defaults filled."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    _check_keys(
        doc,
        "$",
        required=("energy", "mode", "grid", "initial", "bc", "t_end"),
        optional=("snapshots", "out_dir", "seed"),
    )
    energy = _parse_energy(doc["energy"], "$.energy")
    mode = _string(doc["mode"], "$.mode", allowed=("heat", "curvature"))
    if mode == "heat" and energy != "quadratic":
        _fail("$.mode", "heat mode is the flow of the quadratic energy; pick energy 'quadratic'")
    grid = _parse_grid(doc["grid"], "$.grid")
    initial = _parse_initial(doc["initial"], "$.initial")
    bc = _parse_bc(doc["bc"], "$.bc")
    t_end = _positive(doc["t_end"], "$.t_end")
    snapshots = _integer(doc.get("snapshots", 50), "$.snapshots", minimum=2)
    out_dir = _string(doc.get("out_dir", "out"), "$.out_dir")
    seed = _integer(doc.get("seed", 0), "$.seed", minimum=0)
    return RunConfig(
        energy=energy,
        mode=mode,
        grid=grid,
        initial=initial,
        bc=bc,
        t_end=t_end,
        snapshots=snapshots,
        out_dir=out_dir,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# materialization


def make_angular(spec: dict) -> AngularEnergy:
    return angular_from_fourier(spec["a0"], spec.get("cos", ()), spec.get("sin", ()))


def _make_energies(spec) -> tuple[SmoothEnergy, AngularEnergy | None]:
    if spec == "quadratic":
        return quadratic_energy(), None
    if spec == "area":
        return area_energy(), None
    fe = make_angular(spec)
    return angular_to_cartesian(fe), fe


def _make_grid(g: GridSpec) -> SlopeGrid:
    if g.slopes is not None:
        return SlopeGrid(np.asarray(g.slopes, dtype=float))
    return build_slope_grid(g.lo, g.hi, g.m)


def _make_bc(spec: dict) -> BoundaryCondition:
    if spec["kind"] == "dirichlet0":
        return HomogeneousDirichlet()
    if spec["kind"] == "neumann":
        return ConstantNeumann(a=spec["a"], b=spec["b"])

    def side(p):
        c, e, w = p["const"], p["amp"], p["omega"]
        return (lambda t: c + e * math.sin(w * t)), (lambda t: e * w * math.cos(w * t))

    a, ap = side(spec["a"])
    b, bp = side(spec["b"])
    return GeneralDirichlet(a=a, a_prime=ap, b=b, b_prime=bp)


def _initial_callables(spec: dict):
    name = spec["name"]
    if name == "sine":
        a = spec["amplitude"]
        return (lambda x: a * math.sin(math.pi * x)), (lambda x: a * math.pi * math.cos(math.pi * x))
    if name == "parabola":
        a = spec["amplitude"]
        return (lambda x: a * x * (1.0 - x)), (lambda x: a * (1.0 - 2.0 * x))
    if name == "custom":
        pts = spec["samples"]
        sp = CubicSpline([p[0] for p in pts], [p[1] for p in pts])
        return (lambda x: float(sp(x))), (lambda x: float(sp(x, 1)))
    raise ConfigError(f"initial data {name!r} has no smooth form")


def _hat_profile(grid: SlopeGrid) -> Profile:
    # rises with slope 1 on [0, 1/4], flat, falls with slope -1 on [3/4, 1];
    # needs -1, 0, 1 to be consecutive grid slopes
    try:
        i_up, i_flat, i_dn = grid.index_of(1.0), grid.index_of(0.0), grid.index_of(-1.0)
    except GridError as exc:
        raise ConfigError(f"hat initial data needs slopes -1, 0, 1 on the grid: {exc}") from None
    if not (i_up - i_flat == 1 and i_flat - i_dn == 1):
        raise ConfigError("hat initial data needs -1, 0, 1 to be adjacent grid slopes")
    return Profile(
        grid=grid,
        corners=np.array([0.0, 0.25, 0.75, 1.0]),
        slope_idx=np.array([i_up, i_flat, i_dn]),
        left_value=0.0,
    )


def build_problem(config: RunConfig) -> Problem:
    """Grid, energies, boundary behavior, and initial profile for a run."""
    grid = _make_grid(config.grid)
    smooth, angular = _make_energies(config.energy)
    model = FlowModel.from_smooth(smooth, grid, mode=config.mode)
    bc = _make_bc(config.bc)

    if config.initial["name"] == "hat":
        profile = _hat_profile(grid)
        u0 = du0 = None
    else:
        u0, du0 = _initial_callables(config.initial)
        kind = "neumann" if config.bc["kind"] == "neumann" else "dirichlet"
        slopes = (config.bc["a"], config.bc["b"]) if kind == "neumann" else None
        profile = build_initial(u0, du0, grid, bc_kind=kind, neumann_slopes=slopes)
    return Problem(profile=profile, model=model, bc=bc, smooth=smooth, angular=angular, u0=u0, du0=du0)
