"""
Deterministic derivative-free minimization: Nelder-Mead from a fixed
low-discrepancy grid of starts, box penalties and a sphere parametrization
for normalized non-negative coefficient vectors.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize as nelder_mead
from scipy.stats import qmc

import config

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class OptimizerConfig:
    bounds: Tuple[Tuple[float, float], ...]
    max_iterations: int = config.OPTIMIZER_MAX_ITERATIONS
    simplex_tolerance: float = config.OPTIMIZER_XATOL
    f_tolerance: float = config.OPTIMIZER_FATOL
    n_starts: int = config.OPTIMIZER_STARTS
    # explicit start points; defaults to an unscrambled Halton grid over the bounds
    seed_grid: Optional[Tuple[Tuple[float, ...], ...]] = None
    penalty: float = config.OPTIMIZER_PENALTY
    threads: int = 1

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if not bounds:
            raise ValueError("At least one parameter is required")
        if any(hi < lo for lo, hi in bounds):
            raise ValueError(f"Invalid bounds {bounds}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.simplex_tolerance <= 0 or self.f_tolerance <= 0:
            raise ValueError("Tolerances must be positive")
        if self.n_starts < 1 and self.seed_grid is None:
            raise ValueError(f"n_starts must be >= 1, got {self.n_starts}")
        object.__setattr__(self, 'bounds', bounds)

    @property
    def dimension(self) -> int:
        return len(self.bounds)

    def start_points(self) -> np.ndarray:
        if self.seed_grid is not None:
            points = np.array(self.seed_grid, dtype=float)
            if points.ndim != 2 or points.shape[1] != self.dimension:
                raise ValueError(f"seed_grid must have shape (k, {self.dimension})")
            return points
        sampler = qmc.Halton(d=self.dimension, scramble=False)
        # the first Halton point is the lower corner of the box
        sampler.fast_forward(1)
        unit = sampler.random(self.n_starts)
        lower = np.array([lo for lo, _ in self.bounds])
        upper = np.array([hi for _, hi in self.bounds])
        return lower + unit * (upper - lower)


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    trace: List[Tuple[int, float]] = field(default_factory=list)
    budget_exhausted: bool = False
    start_index: int = 0
    n_evaluations: int = 0


def _bounded(f: Objective, bounds: Sequence[Tuple[float, float]], penalty: float) -> Objective:
    lower = np.array([lo for lo, _ in bounds])
    upper = np.array([hi for _, hi in bounds])

    def wrapped(x: np.ndarray) -> float:
        clipped = np.clip(x, lower, upper)
        value = float(f(clipped))
        if not math.isfinite(value):
            value = penalty
        if np.any(clipped != x):
            value += penalty
        return value

    return wrapped


def _run_start(f: Objective, start: np.ndarray, cfg: OptimizerConfig, index: int) -> OptimizeResult:
    objective = _bounded(f, cfg.bounds, cfg.penalty)
    best = {'f': math.inf}
    trace: List[Tuple[int, float]] = []

    def counted(x):
        value = objective(x)
        if value < best['f']:
            best['f'] = value
        return value

    def callback(xk):
        trace.append((len(trace) + 1, best['f']))

    result = nelder_mead(counted, start, method='Nelder-Mead', callback=callback,
                         options={'maxiter': cfg.max_iterations,
                                  'maxfev': cfg.max_iterations * (cfg.dimension + 1),
                                  'xatol': cfg.simplex_tolerance,
                                  'fatol': cfg.f_tolerance})
    x = np.clip(result.x, [lo for lo, _ in cfg.bounds], [hi for _, hi in cfg.bounds])
    return OptimizeResult(x=np.asarray(x, dtype=float), fun=float(result.fun), trace=trace,
                          budget_exhausted=not result.success, start_index=index,
                          n_evaluations=int(result.nfev))


def _better(candidate: OptimizeResult, incumbent: OptimizeResult) -> bool:
    if candidate.fun < incumbent.fun - config.OPTIMIZER_TIE_TOLERANCE:
        return True
    if abs(candidate.fun - incumbent.fun) <= config.OPTIMIZER_TIE_TOLERANCE:
        return tuple(candidate.x) < tuple(incumbent.x)
    return False


def minimize(f: Objective, cfg: OptimizerConfig) -> OptimizeResult:
    """
    Best point over all starts. Starts are independent; the merge picks the
    smallest objective, breaking ties within the tie tolerance by the
    lexicographically smallest x, so the outcome does not depend on thread
    scheduling.
    """
    starts = cfg.start_points()
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as executor:
            results = list(executor.map(lambda item: _run_start(f, item[1], cfg, item[0]),
                                        enumerate(starts)))
    else:
        results = [_run_start(f, start, cfg, k) for k, start in enumerate(starts)]

    winner = results[0]
    for candidate in results[1:]:
        if _better(candidate, winner):
            winner = candidate
    if winner.budget_exhausted:
        logger.warning(f"Winning start {winner.start_index} exhausted its iteration budget "
                       f"(f={winner.fun:.10g})")
    logger.debug(f"Best of {len(results)} starts: f={winner.fun:.12g} from start {winner.start_index}")
    return winner


@dataclass(frozen=True)
class SpherePoint:
    """Hyperspherical angles of a unit vector with non-negative components"""
    angles: Tuple[float, ...]

    @property
    def coefficients(self) -> np.ndarray:
        return angles_to_coefficients(self.angles)

    @classmethod
    def from_coefficients(cls, coeffs: Sequence[float]) -> 'SpherePoint':
        return cls(tuple(coefficients_to_angles(coeffs)))


def angles_to_coefficients(angles: Sequence[float]) -> np.ndarray:
    """c_0 = cos t_1, c_k = sin t_1 ... sin t_k cos t_{k+1}, c_N = sin t_1 ... sin t_N"""
    angles = np.asarray(angles, dtype=float)
    coeffs = np.empty(angles.size + 1)
    running = 1.0
    for k, angle in enumerate(angles):
        coeffs[k] = running * math.cos(angle)
        running *= math.sin(angle)
    coeffs[-1] = running
    return coeffs


def coefficients_to_angles(coeffs: Sequence[float]) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    angles = np.empty(coeffs.size - 1)
    for k in range(coeffs.size - 1):
        tail = math.sqrt(float(np.sum(coeffs[k + 1:] ** 2)))
        angles[k] = math.atan2(tail, coeffs[k])
    return angles


def sphere_bounds(N: int) -> Tuple[Tuple[float, float], ...]:
    return tuple((0.0, math.pi / 2) for _ in range(N))
