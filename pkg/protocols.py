"""
Application benchmarks for a two-mode resource: coherent-state teleportation
fidelity and the Bell-Wigner (displaced parity) combination, with the
optimization entry points over PNES coefficients and phase-space settings.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy import integrate
from scipy.special import roots_laguerre

import config
from fock_core import FockError, PureState, StateEnsemble, radial_displacement_factors
from measures import PhasePoint, characteristic_fn, squeezing_db, wigner
from optimizer import OptimizerConfig, angles_to_coefficients, minimize, sphere_bounds
from pnes_states import PnesCoefficients, canonical_phase, make_pnes, make_tmss, normalize_coeffs

logger = logging.getLogger(__name__)

State = Union[PureState, StateEnsemble]

REAL_LINE = 'real_line'
FULL_COMPLEX = 'full_complex'
BELL_LOCAL_BOUND = 2.0
BELL_PREFACTOR = math.pi ** 2 / 4


@dataclass(frozen=True)
class BellSettings:
    alpha: complex
    alpha_p: complex
    beta: complex
    beta_p: complex

    def __post_init__(self):
        for value in (self.alpha, self.alpha_p, self.beta, self.beta_p):
            if not np.isfinite(value):
                raise FockError(f"Bell settings must be finite, got {self}")

    @classmethod
    def from_vector(cls, x, strategy: str = REAL_LINE) -> 'BellSettings':
        x = np.asarray(x, dtype=float)
        if strategy == REAL_LINE:
            return cls(complex(x[0]), complex(x[1]), complex(x[2]), complex(x[3]))
        if strategy == FULL_COMPLEX:
            return cls(complex(x[0], x[1]), complex(x[2], x[3]), complex(x[4], x[5]), complex(x[6], x[7]))
        raise ValueError(f"Unknown Bell strategy: {strategy}")

    def as_dict(self) -> dict:
        return {name: [value.real, value.imag] for name, value in
                (('alpha', self.alpha), ('alpha_p', self.alpha_p),
                 ('beta', self.beta), ('beta_p', self.beta_p))}


def setting_dimension(strategy: str) -> int:
    if strategy == REAL_LINE:
        return 4
    if strategy == FULL_COMPLEX:
        return 8
    raise ValueError(f"Unknown Bell strategy: {strategy}")


@dataclass(frozen=True)
class TeleportResult:
    fidelity: float
    resource_coeffs: Optional[PnesCoefficients]
    equivalent_tmss_s: float

    @property
    def equivalent_db(self) -> float:
        return squeezing_db(self.equivalent_tmss_s)


def _members(state: State):
    if isinstance(state, PureState):
        return [(1.0, state)]
    return state.members


def _is_diagonal(psi: np.ndarray) -> bool:
    return psi.shape[0] == psi.shape[1] and not np.any(psi - np.diag(np.diag(psi)))


def _teleport_integrand(psi: np.ndarray, u: float, diagonal: bool = False) -> float:
    """sum over k - l = m - n of psi*_mk psi_nl r_mn(u) r_kl(u)"""
    da, db = psi.shape
    if diagonal:
        # psi_mk = C_m delta_mk leaves sum_mn C*_m C_n r_mn^2
        c = np.diag(psi)
        r = radial_displacement_factors(u, da, da)
        return float((c.conj() @ (r ** 2) @ c).real)
    ra = radial_displacement_factors(u, da, da)
    rb = radial_displacement_factors(u, db, db)
    m = np.arange(da)
    k = np.arange(db)
    same_shift = (m[:, None, None, None] - m[None, None, :, None]) == \
                 (k[None, :, None, None] - k[None, None, None, :])
    pairs = np.einsum('mk,nl->mknl', psi.conj(), psi)
    weights = ra[:, None, :, None] * rb[None, :, None, :]
    return float(np.sum(pairs * weights * same_shift).real)


def teleport_fidelity_coherent(resource: State) -> float:
    """
    Average fidelity of coherent-state teleportation through the resource.

    F = int_0^inf du e^{-2u} sum_{k-l=m-n} psi*_mk psi_nl r_mn(u) r_kl(u), a
    polynomial moment integral evaluated exactly by Gauss-Laguerre nodes.
    """
    members = _members(resource)
    total = sum(w for w, _ in members)
    value = 0.0
    for weight, member in members:
        if member.n_modes != 2:
            raise FockError(f"Teleportation resource must have two modes, got {member.n_modes}")
        psi = member.amplitudes
        diagonal = _is_diagonal(psi)
        nodes, node_weights = roots_laguerre(max(psi.shape))
        fidelity = 0.5 * sum(w * _teleport_integrand(psi, v / 2, diagonal) for v, w in zip(nodes, node_weights))
        value += weight * fidelity / member.norm_squared
    return float(value / total)


def teleport_fidelity_quadrature(resource: State, epsabs: float = 1e-11) -> float:
    """Direct integration of (1/pi) int d^2 lambda e^{-|lambda|^2} C_E(lambda^*, lambda)"""
    members = _members(resource)
    cutoff = max(max(m.cutoffs.per_mode) for _, m in members)
    n_angles = 4 * cutoff + 4
    thetas = 2 * math.pi * np.arange(n_angles) / n_angles

    def radial(r):
        lam = r * np.exp(1j * thetas)
        values = [characteristic_fn(resource, np.conj(x), x).real for x in lam]
        return 2 * r * math.exp(-r * r) * float(np.mean(values))

    value, _ = integrate.quad(radial, 0.0, np.inf, epsabs=epsabs, epsrel=1e-10, limit=200)
    return float(value)


def teleport_fidelity_tmss(s: float) -> float:
    return 1.0 / (1.0 + math.exp(-2.0 * s))


def equivalent_tmss_squeezing(fidelity: float) -> float:
    """Invert F = 1 / (1 + e^{-2s})"""
    if fidelity <= 0.5:
        return 0.0
    if fidelity >= 1.0:
        return math.inf
    return -0.5 * math.log(1.0 / fidelity - 1.0)


def teleport_fidelity_matrix(N: int) -> np.ndarray:
    """M with F = c^T M c for a real PNES c; M_mn = int e^{-2u} r_mn(u)^2 du"""
    nodes, weights = roots_laguerre(N + 1)
    matrix = np.zeros((N + 1, N + 1))
    for v, w in zip(nodes, weights):
        r = radial_displacement_factors(v / 2, N + 1, N + 1)
        matrix += 0.5 * w * r ** 2
    return matrix


def teleport_fidelity_pnes(coeffs: PnesCoefficients) -> float:
    return teleport_fidelity_coherent(make_pnes(coeffs, max(coeffs.N, 1)))


def optimize_pnes_for_teleportation(N: int, cfg: Optional[OptimizerConfig] = None) -> TeleportResult:
    """Real non-negative coefficients maximizing the coherent-state teleportation fidelity"""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    matrix = teleport_fidelity_matrix(N)
    cfg = cfg or OptimizerConfig(bounds=sphere_bounds(N))

    def objective(angles):
        c = angles_to_coefficients(angles)
        return -float(c @ matrix @ c)

    result = minimize(objective, cfg)
    coeffs = canonical_phase(normalize_coeffs(angles_to_coefficients(result.x)))
    fidelity = teleport_fidelity_pnes(coeffs)
    logger.info(f"Teleportation optimum N={N}: F={fidelity:.6f}, coefficients {np.round(coeffs.magnitudes(), 4)}")
    return TeleportResult(fidelity, coeffs, equivalent_tmss_squeezing(fidelity))


def bell_bw(state: State, settings: BellSettings) -> float:
    """(pi^2/4) |W(a,b) + W(a,b') + W(a',b) - W(a',b')|"""
    total = (wigner(state, PhasePoint(settings.alpha, settings.beta))
             + wigner(state, PhasePoint(settings.alpha, settings.beta_p))
             + wigner(state, PhasePoint(settings.alpha_p, settings.beta))
             - wigner(state, PhasePoint(settings.alpha_p, settings.beta_p)))
    return BELL_PREFACTOR * abs(total)


def _setting_seeds(strategy: str) -> np.ndarray:
    """
    Start points for the settings: a = b = 0 with a' = -b' = +-x on the real
    axis for each seed displacement, then a Halton grid over a small box.
    Far from the origin every Wigner term vanishes and the simplex cannot move.
    """
    dimension = setting_dimension(strategy)
    step = 1 if strategy == REAL_LINE else 2
    structured = []
    for x in config.BELL_SEED_DISPLACEMENTS:
        for sign in (-1.0, 1.0):
            point = np.zeros(dimension)
            point[step] = x
            point[3 * step] = sign * x
            structured.append(point)
    radius = config.BELL_START_RADIUS
    halton = OptimizerConfig(bounds=tuple((-radius, radius) for _ in range(dimension))).start_points()
    return np.vstack([np.array(structured), halton])


def bell_optimizer_config(strategy: str, extra_bounds=(), threads: int = 1) -> OptimizerConfig:
    bound = config.BELL_SETTING_BOUND
    bounds = tuple(extra_bounds) + tuple((-bound, bound) for _ in range(setting_dimension(strategy)))
    seeds = _setting_seeds(strategy)
    if extra_bounds:
        angles = OptimizerConfig(bounds=tuple(extra_bounds), n_starts=len(seeds)).start_points()
        seeds = np.hstack([angles, seeds])
    return OptimizerConfig(bounds=bounds, seed_grid=tuple(tuple(row) for row in seeds), threads=threads)


def optimize_bell(state: State, strategy: str = REAL_LINE,
                  cfg: Optional[OptimizerConfig] = None) -> Tuple[float, BellSettings]:
    """Multi-start Nelder-Mead maximization of bell_bw over the settings"""
    cfg = cfg or bell_optimizer_config(strategy)
    result = minimize(lambda x: -bell_bw(state, BellSettings.from_vector(x, strategy)), cfg)
    settings = BellSettings.from_vector(result.x, strategy)
    value = bell_bw(state, settings)
    logger.info(f"Bell optimum ({strategy}): B={value:.6f}")
    return value, settings


def optimize_pnes_for_bell(N: int, strategy: str = REAL_LINE,
                           cfg: Optional[OptimizerConfig] = None
                           ) -> Tuple[float, PnesCoefficients, BellSettings]:
    """Joint maximization over real non-negative coefficients and settings"""
    if N == 0:
        state = make_pnes(normalize_coeffs([1.0]), 1)
        value, settings = optimize_bell(state, strategy)
        return value, normalize_coeffs([1.0]), settings

    cfg = cfg or bell_optimizer_config(strategy, extra_bounds=sphere_bounds(N))

    def objective(x):
        coeffs = normalize_coeffs(angles_to_coefficients(x[:N]))
        return -bell_bw(make_pnes(coeffs, N), BellSettings.from_vector(x[N:], strategy))

    result = minimize(objective, cfg)
    coeffs = canonical_phase(normalize_coeffs(angles_to_coefficients(result.x[:N])))
    settings = BellSettings.from_vector(result.x[N:], strategy)
    value = bell_bw(make_pnes(coeffs, N), settings)
    logger.info(f"Bell optimum N={N} ({strategy}): B={value:.6f}, coefficients {np.round(coeffs.magnitudes(), 4)}")
    return value, coeffs, settings


def bell_optimal_tmss(s: float, strategy: str = REAL_LINE) -> Tuple[float, BellSettings]:
    return optimize_bell(make_tmss(s), strategy)
