"""Shared builders for the test suite.

Randomized pieces (anisotropies, zero-boundary profiles) are deterministic
given a numpy Generator, so tests seed their own and stay reproducible.
"""

import numpy as np
import pytest

from crystalflow import (
    NotStrictlyStable,
    Profile,
    SlopeGrid,
    angular_from_fourier,
    build_slope_grid,
    check_strict_stability,
    validate_or_raise,
)


@pytest.fixture
def grid_unit() -> SlopeGrid:
    """Integer slopes -2..2; the hat profile lives here."""
    return build_slope_grid(-2.0, 2.0, 1.0)


@pytest.fixture
def hat(grid_unit) -> Profile:
    up = grid_unit.index_of(1.0)
    return Profile(
        grid=grid_unit,
        corners=np.array([0.0, 0.25, 0.75, 1.0]),
        slope_idx=np.array([up, up - 1, up - 2]),
        left_value=0.0,
    )


def random_stable_angular(rng: np.random.Generator, n_harmonics: int = 3, scale: float = 0.08):
    """Random Fourier anisotropy, resampled until strictly stable."""
    for _ in range(100):
        fe = angular_from_fourier(
            1.0,
            cos_coeffs=rng.uniform(-scale, scale, n_harmonics),
            sin_coeffs=rng.uniform(-scale, scale, n_harmonics),
        )
        try:
            check_strict_stability(fe)
        except NotStrictlyStable:
            continue
        return fe
    raise AssertionError("could not draw a strictly stable anisotropy")


def random_zero_boundary_profile(
    rng: np.random.Generator,
    grid: SlopeGrid,
    n_faces: int | None = None,
) -> Profile:
    """Random admissible profile with u(0) = u(1) = 0.

    Draws an adjacent-index walk with both signs of slope present, then
    rebalances the positive-slope face lengths so the slopes integrate to
    zero; rescaling everything back to total length one keeps that integral
    at zero.
    """
    n = int(n_faces) if n_faces is not None else int(rng.integers(4, 13))
    mid = len(grid) // 2
    for _ in range(1000):
        idx = np.empty(n, dtype=np.int64)
        idx[0] = mid + rng.integers(-1, 2)
        for i in range(1, n):
            step = 1 if rng.random() < 0.5 else -1
            j = idx[i - 1] + step
            if not 0 <= j < len(grid):
                j = idx[i - 1] - step
            idx[i] = j
        s = grid.slopes[idx]
        if not ((s > 0).any() and (s < 0).any()):
            continue
        lengths = rng.uniform(0.2, 1.0, n)
        pos = s > 0
        s_pos = float(np.dot(s[pos], lengths[pos]))
        s_neg = -float(np.dot(s[~pos], lengths[~pos]))
        if s_pos <= 0 or s_neg <= 0:
            continue
        lengths[pos] *= s_neg / s_pos
        lengths /= lengths.sum()
        corners = np.concatenate([[0.0], np.cumsum(lengths)])
        corners[-1] = 1.0
        profile = Profile(grid=grid, corners=corners, slope_idx=idx, left_value=0.0)
        validate_or_raise(profile)
        assert abs(profile.corner_values()[-1]) < 1e-12
        return profile
    raise AssertionError("could not draw an admissible zero-boundary profile")
