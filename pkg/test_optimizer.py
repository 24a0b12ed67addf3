"""
Tests for the multi-start Nelder-Mead optimizer and the sphere parametrization
"""

import math

import numpy as np
import pytest

from optimizer import (OptimizerConfig, SpherePoint, angles_to_coefficients, coefficients_to_angles, minimize,
                       sphere_bounds)


def _bowl(x):
    return (x[0] - 0.3) ** 2 + (x[1] + 0.2) ** 2


def test_minimize_finds_interior_minimum():
    result = minimize(_bowl, OptimizerConfig(bounds=((-1, 1), (-1, 1)), n_starts=4))
    np.testing.assert_allclose(result.x, [0.3, -0.2], atol=1e-6)
    assert result.fun == pytest.approx(0.0, abs=1e-10)
    assert result.n_evaluations > 0
    assert result.trace


def test_minimize_respects_bounds():
    result = minimize(_bowl, OptimizerConfig(bounds=((0.5, 1), (-1, 1)), n_starts=4))
    assert 0.5 <= result.x[0] <= 1
    assert result.x[0] == pytest.approx(0.5, abs=1e-6)


def test_threaded_result_matches_serial():
    cfg = OptimizerConfig(bounds=((-2, 2), (-2, 2)), n_starts=8)

    def multi_well(x):
        return math.sin(3 * x[0]) * math.cos(2 * x[1]) + 0.1 * (x[0] ** 2 + x[1] ** 2)

    serial = minimize(multi_well, cfg)
    threaded = minimize(multi_well, OptimizerConfig(bounds=cfg.bounds, n_starts=8, threads=4))
    np.testing.assert_array_equal(serial.x, threaded.x)
    assert serial.fun == threaded.fun


def test_start_points_are_deterministic_and_inside_bounds():
    cfg = OptimizerConfig(bounds=((0, 1), (-3, 3), (2, 5)), n_starts=10)
    points = cfg.start_points()
    np.testing.assert_array_equal(points, cfg.start_points())
    assert points.shape == (10, 3)
    lower = np.array([0, -3, 2])
    upper = np.array([1, 3, 5])
    assert np.all(points >= lower) and np.all(points <= upper)


def test_explicit_seed_grid():
    cfg = OptimizerConfig(bounds=((-1, 1),), seed_grid=((0.9,),))
    result = minimize(lambda x: (x[0] - 0.25) ** 2, cfg)
    assert result.x[0] == pytest.approx(0.25, abs=1e-6)
    with pytest.raises(ValueError):
        OptimizerConfig(bounds=((-1, 1),), seed_grid=((0.1, 0.2),)).start_points()


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(bounds=())
    with pytest.raises(ValueError):
        OptimizerConfig(bounds=((1, 0),))
    with pytest.raises(ValueError):
        OptimizerConfig(bounds=((0, 1),), max_iterations=0)


def test_non_finite_objective_is_penalized():
    result = minimize(lambda x: math.nan if x[0] < 0 else (x[0] - 0.5) ** 2,
                      OptimizerConfig(bounds=((-1, 1),), n_starts=3))
    assert result.x[0] == pytest.approx(0.5, abs=1e-6)


def test_sphere_parametrization():
    coeffs = angles_to_coefficients([math.pi / 3, math.pi / 4])
    assert np.sum(coeffs ** 2) == pytest.approx(1.0)
    assert coeffs[0] == pytest.approx(0.5)
    np.testing.assert_allclose(coefficients_to_angles(coeffs), [math.pi / 3, math.pi / 4])

    point = SpherePoint.from_coefficients([0.6, 0.0, 0.8])
    np.testing.assert_allclose(point.coefficients, [0.6, 0.0, 0.8], atol=1e-15)
    assert sphere_bounds(2) == ((0.0, math.pi / 2), (0.0, math.pi / 2))
