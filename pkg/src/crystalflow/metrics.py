"""Error measurement between profiles and reference solutions.

All integrals are per-face 5-point Gauss-Legendre, exact for polynomial
integrands up to degree nine on each face, so the quadrature error is
negligible next to the discretization errors being measured.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .profile import Profile

__all__ = [
    "ErrorReport",
    "face_quadrature",
    "value_error_l2",
    "slope_error_l2",
    "h1_error",
    "mean_value",
    "compare",
    "fit_rate",
    "write_convergence_csv",
]

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(5)


def _panels(profile: Profile) -> tuple[np.ndarray, np.ndarray]:
    c = profile.corners
    mid = 0.5 * (c[:-1] + c[1:])
    half = 0.5 * np.diff(c)
    X = mid[:, None] + half[:, None] * _NODES[None, :]
    W = half[:, None] * _WEIGHTS[None, :]
    return X, W


def face_quadrature(profile: Profile, f: Callable) -> float:
    """Integral of f over [0, 1], with quadrature panels on the faces."""
    X, W = _panels(profile)
    return float(np.sum(W * f(X)))


def value_error_l2(profile: Profile, u_ref: Callable) -> float:
    X, W = _panels(profile)
    d = profile.evaluate(X) - u_ref(X)
    return float(np.sqrt(np.sum(W * d * d)))


def slope_error_l2(profile: Profile, ux_ref: Callable) -> float:
    X, W = _panels(profile)
    d = profile.slopes()[:, None] - ux_ref(X)
    return float(np.sqrt(np.sum(W * d * d)))


def h1_error(profile: Profile, u_ref: Callable, ux_ref: Callable) -> float:
    eu = value_error_l2(profile, u_ref)
    es = slope_error_l2(profile, ux_ref)
    return float(np.hypot(eu, es))


def mean_value(profile: Profile) -> float:
    """Integral of the profile; trapezoid over corners is exact here."""
    v = profile.corner_values()
    return float(np.sum(0.5 * (v[:-1] + v[1:]) * profile.lengths()))


@dataclass(frozen=True)
class ErrorReport:
    t: float
    l2_u: float
    l2_ux: float
    h1: float
    mean_gap: float


def compare(profile: Profile, u_ref: Callable, ux_ref: Callable, t: float) -> ErrorReport:
    eu = value_error_l2(profile, u_ref)
    es = slope_error_l2(profile, ux_ref)
    gap = abs(mean_value(profile) - face_quadrature(profile, u_ref))
    return ErrorReport(t=float(t), l2_u=eu, l2_ux=es, h1=float(np.hypot(eu, es)), mean_gap=gap)


def fit_rate(ms: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log err against log m."""
    ms = np.asarray(ms, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(ms) < 2:
        raise ValueError("rate fit needs at least two points")
    if np.any(errors <= 0.0):
        raise ValueError("rate fit needs positive errors")
    return float(np.polyfit(np.log(ms), np.log(errors), 1)[0])


def write_convergence_csv(rows: Sequence[dict], path) -> None:
    """Rows carry m, N0 and an ErrorReport's fields."""
    cols = ["m", "N0", "t", "l2_u", "l2_ux", "h1"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([f"{r[c]:.17g}" if isinstance(r[c], float) else r[c] for c in cols])
