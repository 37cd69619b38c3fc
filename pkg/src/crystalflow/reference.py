"""Reference solutions to compare the face dynamics against.

Two flavors: closed-form sine series for the heat case, and a dense
finite-difference solve (second order central, RK4, explicit) for anything
else.  The FD path has hand-tuned kernels for the two energies the test
scenarios exercise; other energies fall back to a plain numpy loop that is
correct but slow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numba import njit
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .energy import SmoothEnergy
from .errors import ConfigError

__all__ = [
    "FourierSolution",
    "ReferenceSolution",
    "exact_heat",
    "exact_heat_t",
    "exact_heat_x",
    "exact_heat_xxx",
    "fd_reference",
]


@dataclass(frozen=True)
class FourierSolution:
    """Heat evolution of a sine series on [0, 1] with zero wall values.

    coefficients[k-1] multiplies sin(k pi x); every derivative is summed
    termwise, so all of u, ux, ut, uxxx are exact to rounding.
    """

    coefficients: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=float))

    def _modes(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        k = np.arange(1, len(self.coefficients) + 1)
        kpi = k * np.pi
        amp = self.coefficients * np.exp(-(kpi**2) * t)
        # drop a trailing block of modes whose collective weight is rounding
        # noise even for the third derivative
        w = np.abs(amp) * kpi**3
        crev = np.cumsum(w[::-1])
        droppable = int(np.searchsorted(crev, 1e-16 * (crev[-1] + 1.0), side="right"))
        keep = max(len(kpi) - droppable, 1)
        return kpi[:keep], amp[:keep]

    def u(self, x, t: float):
        kpi, amp = self._modes(t)
        out = np.sin(np.multiply.outer(np.asarray(x, dtype=float), kpi)) @ amp
        return float(out) if np.isscalar(x) else out

    def ux(self, x, t: float):
        kpi, amp = self._modes(t)
        out = np.cos(np.multiply.outer(np.asarray(x, dtype=float), kpi)) @ (amp * kpi)
        return float(out) if np.isscalar(x) else out

    def ut(self, x, t: float):
        kpi, amp = self._modes(t)
        out = np.sin(np.multiply.outer(np.asarray(x, dtype=float), kpi)) @ (-amp * kpi**2)
        return float(out) if np.isscalar(x) else out

    def uxxx(self, x, t: float):
        kpi, amp = self._modes(t)
        out = np.cos(np.multiply.outer(np.asarray(x, dtype=float), kpi)) @ (-amp * kpi**3)
        return float(out) if np.isscalar(x) else out

    def max_uxxx(self, t: float) -> float:
        """Termwise bound on sup |uxxx|; exact for a single mode."""
        kpi, amp = self._modes(t)
        return float(np.sum(np.abs(amp) * kpi**3))

    @classmethod
    def sine(cls, amplitude: float = 1.0) -> "FourierSolution":
        return cls(np.array([amplitude]))

    @classmethod
    def parabola(cls, n_modes: int = 300_000) -> "FourierSolution":
        """Series of x(1 - x): odd modes with 8 / (pi k)^3 weights.

        The default keeps the discarded tail below 1e-12 in absolute sum
        (tail ~ 2 / (pi^3 K^2)); evaluation stays cheap because _modes
        truncates by decayed amplitude.
        """
        k = np.arange(1, n_modes + 1)
        b = np.where(k % 2 == 1, 8.0 / (np.pi * k) ** 3, 0.0)
        return cls(b)

    @classmethod
    def from_initial(cls, u0: Callable[[float], float], n_modes: int = 64) -> "FourierSolution":
        b = np.empty(n_modes)
        for k in range(1, n_modes + 1):
            val, _ = quad(lambda x: u0(x) * math.sin(k * math.pi * x), 0.0, 1.0, epsabs=1e-13, limit=200)
            b[k - 1] = 2.0 * val
        return cls(b)


def exact_heat(sol: FourierSolution, x, t: float):
    """Value of the series solution; exact_heat_x/_t/_xxx give derivatives."""
    return sol.u(x, t)


def exact_heat_x(sol: FourierSolution, x, t: float):
    return sol.ux(x, t)


def exact_heat_t(sol: FourierSolution, x, t: float):
    return sol.ut(x, t)


def exact_heat_xxx(sol: FourierSolution, x, t: float):
    return sol.uxxx(x, t)


# ---------------------------------------------------------------------------
# finite differences

_DIRICHLET, _NEUMANN = 0, 1
_HEAT, _AREA = 0, 1


@njit(cache=True)
def _fd_rhs(u, out, dx, bc, a, b, mode):
    nx = u.shape[0]
    inv = 1.0 / (dx * dx)
    if mode == _HEAT:
        for i in range(1, nx - 1):
            out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv
    else:
        for i in range(1, nx - 1):
            ux = (u[i + 1] - u[i - 1]) / (2.0 * dx)
            out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv / (1.0 + ux * ux)
    if bc == _NEUMANN:
        gl = u[1] - 2.0 * dx * a
        gr = u[nx - 2] + 2.0 * dx * b
        if mode == _HEAT:
            out[0] = (u[1] - 2.0 * u[0] + gl) * inv
            out[nx - 1] = (gr - 2.0 * u[nx - 1] + u[nx - 2]) * inv
        else:
            out[0] = (u[1] - 2.0 * u[0] + gl) * inv / (1.0 + a * a)
            out[nx - 1] = (gr - 2.0 * u[nx - 1] + u[nx - 2]) * inv / (1.0 + b * b)
    else:
        out[0] = 0.0
        out[nx - 1] = 0.0


@njit(cache=True)
def _fd_advance(u, n_steps, dt, dx, bc, a, b, mode):
    nx = u.shape[0]
    k1 = np.empty(nx)
    k2 = np.empty(nx)
    k3 = np.empty(nx)
    k4 = np.empty(nx)
    y = np.empty(nx)
    for _ in range(n_steps):
        _fd_rhs(u, k1, dx, bc, a, b, mode)
        for i in range(nx):
            y[i] = u[i] + 0.5 * dt * k1[i]
        _fd_rhs(y, k2, dx, bc, a, b, mode)
        for i in range(nx):
            y[i] = u[i] + 0.5 * dt * k2[i]
        _fd_rhs(y, k3, dx, bc, a, b, mode)
        for i in range(nx):
            y[i] = u[i] + dt * k3[i]
        _fd_rhs(y, k4, dx, bc, a, b, mode)
        for i in range(nx):
            u[i] += (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


def _python_rhs(u: np.ndarray, dx: float, bc: int, a: float, b: float, diffusivity) -> np.ndarray:
    out = np.empty_like(u)
    ux = (u[2:] - u[:-2]) / (2.0 * dx)
    uxx = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (dx * dx)
    out[1:-1] = diffusivity(ux) * uxx
    if bc == _NEUMANN:
        gl = u[1] - 2.0 * dx * a
        gr = u[-2] + 2.0 * dx * b
        out[0] = diffusivity(a) * (u[1] - 2.0 * u[0] + gl) / (dx * dx)
        out[-1] = diffusivity(b) * (gr - 2.0 * u[-1] + u[-2]) / (dx * dx)
    else:
        out[0] = out[-1] = 0.0
    return out


def _python_advance(u, n_steps, dt, dx, bc, a, b, diffusivity):
    for _ in range(n_steps):
        k1 = _python_rhs(u, dx, bc, a, b, diffusivity)
        k2 = _python_rhs(u + 0.5 * dt * k1, dx, bc, a, b, diffusivity)
        k3 = _python_rhs(u + 0.5 * dt * k2, dx, bc, a, b, diffusivity)
        k4 = _python_rhs(u + dt * k3, dx, bc, a, b, diffusivity)
        u += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class ReferenceSolution:
    """Dense solution values on a uniform x grid at selected times.

    Point queries go through a cubic spline per saved time, so comparisons
    against piecewise-linear profiles are not quantized to the FD grid.
    """

    xs: np.ndarray
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self._splines: dict[int, CubicSpline] = {}

    def _index(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, float(self.times[-1])):
            raise ConfigError(f"time {t!r} was not saved; nearest is {self.times[i]!r}")
        return i

    def _spline(self, t: float) -> CubicSpline:
        i = self._index(t)
        if i not in self._splines:
            self._splines[i] = CubicSpline(self.xs, self.values[i])
        return self._splines[i]

    def u(self, x, t: float):
        out = self._spline(t)(x)
        return float(out) if np.isscalar(x) else out

    def ux(self, x, t: float):
        out = self._spline(t)(x, 1)
        return float(out) if np.isscalar(x) else out

    def sample(self, t: float) -> tuple[Callable, Callable]:
        sp = self._spline(t)
        return (lambda x: sp(x)), (lambda x: sp(x, 1))


def fd_reference(
    u0: Callable[[float], float],
    save_times: Sequence[float],
    mode: str = "heat",
    energy: SmoothEnergy | None = None,
    bc_kind: str = "dirichlet",
    neumann_slopes: tuple[float, float] | None = None,
    nx: int = 1024,
    cfl: float = 0.2,
) -> ReferenceSolution:
    """Dense explicit solve of the smooth flow, saved at the given times.

    mode "heat" integrates u_t = u_xx.  mode "curvature" integrates
    u_t = sqrt(1 + ux^2) W''(ux) uxx; with the area energy that reduces to
    uxx / (1 + ux^2) and runs in the compiled kernel, any other energy takes
    the slow generic path.
    """
    times = np.asarray(sorted(set(float(s) for s in save_times)), dtype=float)
    if len(times) == 0 or times[0] < 0.0:
        raise ConfigError("save times must be non-negative and non-empty")
    if not 0.0 < cfl <= 0.5:
        raise ConfigError(f"cfl must lie in (0, 0.5], got {cfl!r}")
    if nx < 4:
        raise ConfigError(f"nx must be at least 4, got {nx!r}")

    bc = _NEUMANN if bc_kind == "neumann" else _DIRICHLET
    a = b = 0.0
    if bc == _NEUMANN:
        if neumann_slopes is None:
            raise ConfigError("neumann reference needs the (a, b) boundary slopes")
        a, b = float(neumann_slopes[0]), float(neumann_slopes[1])

    xs = np.linspace(0.0, 1.0, nx + 1)
    u = np.array([float(u0(x)) for x in xs])
    dx = xs[1] - xs[0]

    kernel_mode = None
    diffusivity = None
    if mode == "heat":
        kernel_mode = _HEAT
    elif mode == "curvature":
        if energy is None:
            raise ConfigError("curvature reference needs the smooth energy")
        if energy.name == "area":
            kernel_mode = _AREA
        else:
            d2 = energy.d2
            diffusivity = lambda s: np.sqrt(1.0 + s * s) * d2(s)
    else:
        raise ConfigError(f"unknown mode {mode!r}")

    if kernel_mode is not None:
        d_max = 1.0  # both kernel diffusivities are bounded by one
    else:
        sl = 1.5 * float(np.max(np.abs(np.gradient(u, dx)))) + 1e-9
        d_max = float(np.max(np.abs(diffusivity(np.linspace(-sl, sl, 257)))))
        if not (d_max > 0.0 and math.isfinite(d_max)):
            raise ConfigError("diffusivity is degenerate on the initial slope range")
    dt_target = cfl * dx * dx / d_max

    values = np.empty((len(times), nx + 1))
    t_cur = 0.0
    row = 0
    if times[0] == 0.0:
        values[0] = u
        row = 1
    for j in range(row, len(times)):
        span_t = times[j] - t_cur
        n_steps = max(1, int(math.ceil(span_t / dt_target - 1e-12)))
        dt = span_t / n_steps
        if kernel_mode is not None:
            _fd_advance(u, n_steps, dt, dx, bc, a, b, kernel_mode)
        else:
            _python_advance(u, n_steps, dt, dx, bc, a, b, diffusivity)
        t_cur = times[j]
        values[j] = u

    return ReferenceSolution(xs=xs, times=times, values=values)
