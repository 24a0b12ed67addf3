"""
Figures of merit on two-mode states: entanglement entropy, EPR correlation,
characteristic function and the two-mode Wigner function (displaced parity).

Functions that accept a state take either a PureState or a StateEnsemble;
ensembles are evaluated member by member and combined with their weights.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

import config
from fock_core import (FockError, PureState, StateEnsemble, DensityMatrix, displacement_matrix,
                       pad_state, partial_trace)
from pnes_states import PnesCoefficients, canonical_phase

logger = logging.getLogger(__name__)

State = Union[PureState, StateEnsemble]

WIGNER_PREFACTOR = 4.0 / math.pi ** 2
WIGNER_MAX_ROWS = 200


@dataclass(frozen=True)
class PhasePoint:
    alpha: complex
    beta: complex

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise FockError(f"Phase-space point must be finite, got ({self.alpha}, {self.beta})")


def _members(state: State):
    if isinstance(state, PureState):
        return [(1.0, state)]
    if not state.members:
        raise FockError("Empty ensemble")
    return state.members


def _check_two_mode(state: State):
    n_modes = state.n_modes if isinstance(state, PureState) else state.cutoffs.n_modes
    if n_modes != 2:
        raise FockError(f"Expected a two-mode state, got {n_modes} modes")


def schmidt_probabilities(state: PureState) -> np.ndarray:
    """Eigenvalues of the reduced density matrix, largest first"""
    singular = np.linalg.svd(state.amplitudes, compute_uv=False)
    return singular ** 2 / state.norm_squared


def entanglement_entropy(state: PureState) -> float:
    """von Neumann entropy of either reduced state, in bits"""
    _check_two_mode(state)
    if not state.normalized:
        raise FockError(f"Entropy needs a normalized state, got norm^2 = {state.norm_squared}")
    probs = schmidt_probabilities(state)
    probs = probs[probs > config.ENTROPY_EIGENVALUE_FLOOR]
    return float(-np.sum(probs * np.log2(probs)))


def entanglement_entropy_tmss(s: float) -> float:
    """Closed form cosh^2 log2 cosh^2 - sinh^2 log2 sinh^2"""
    if s == 0:
        return 0.0
    ch2, sh2 = math.cosh(s) ** 2, math.sinh(s) ** 2
    return ch2 * math.log2(ch2) - sh2 * math.log2(sh2)


def reduced_density(state: State, mode: int) -> DensityMatrix:
    return partial_trace(state, [mode])


def _quadrature_combinations(state: PureState) -> Tuple[PureState, np.ndarray, np.ndarray]:
    """Apply x_A - x_B and p_A + p_B to the state padded by one photon per mode"""
    padded = pad_state(state, tuple(c + 1 for c in state.cutoffs.per_mode))
    psi = padded.amplitudes
    a = np.zeros_like(psi)
    a[:-1, :] = np.sqrt(np.arange(1, psi.shape[0]))[:, None] * psi[1:, :]
    a_dag = np.zeros_like(psi)
    a_dag[1:, :] = np.sqrt(np.arange(1, psi.shape[0]))[:, None] * psi[:-1, :]
    b = np.zeros_like(psi)
    b[:, :-1] = np.sqrt(np.arange(1, psi.shape[1]))[None, :] * psi[:, 1:]
    b_dag = np.zeros_like(psi)
    b_dag[:, 1:] = np.sqrt(np.arange(1, psi.shape[1]))[None, :] * psi[:, :-1]
    u = (a + a_dag - b - b_dag) / math.sqrt(2)
    v = (a - a_dag + b - b_dag) / (1j * math.sqrt(2))
    return padded, u, v


def epr_correlation(state: State) -> float:
    """Var(x_A - x_B) + Var(p_A + p_B); 2 for vacuum, below 2 certifies entanglement"""
    _check_two_mode(state)
    members = _members(state)
    total = sum(w for w, _ in members)
    second = 0.0
    mean_u = 0.0
    mean_v = 0.0
    for weight, member in members:
        padded, u, v = _quadrature_combinations(member)
        norm2 = member.norm_squared
        second += weight * (np.vdot(u, u).real + np.vdot(v, v).real) / norm2
        mean_u += weight * np.vdot(padded.amplitudes, u).real / norm2
        mean_v += weight * np.vdot(padded.amplitudes, v).real / norm2
    second /= total
    mean_u /= total
    mean_v /= total
    return float(second - mean_u ** 2 - mean_v ** 2)


def epr_tmss(s: float) -> float:
    return 2.0 * math.exp(-2.0 * s)


def epr_quadratic_form(N: int) -> np.ndarray:
    """EPR correlation of a real PNES as c^T M c"""
    n = np.arange(N + 1, dtype=float)
    matrix = np.diag(2.0 + 4.0 * n)
    for k in range(1, N + 1):
        matrix[k - 1, k] = matrix[k, k - 1] = -2.0 * k
    return matrix


def minimize_epr_pnes(N: int) -> Tuple[float, PnesCoefficients]:
    """Smallest EPR correlation reachable with N+1 coefficients, and its minimizer"""
    if N < 0:
        raise FockError(f"N must be >= 0, got {N}")
    values, vectors = np.linalg.eigh(epr_quadratic_form(N))
    coeffs = vectors[:, 0] / np.linalg.norm(vectors[:, 0])
    return float(values[0]), canonical_phase(PnesCoefficients(coeffs))


def squeezing_db(s: float) -> float:
    return 10.0 * math.log10(math.exp(2.0 * s))


def characteristic_fn(state: State, lambda2: complex, lambda3: complex) -> complex:
    """Tr[rho D_a(lambda2) D_b(lambda3)], exact within the state's support"""
    _check_two_mode(state)
    total = 0.0
    weight_sum = 0.0
    for weight, member in _members(state):
        ca, cb = member.cutoffs.per_mode
        da = displacement_matrix(lambda2, ca)
        db = displacement_matrix(lambda3, cb)
        psi = member.amplitudes
        total += weight * np.sum(psi.conj() * (da @ psi @ db.T)) / member.norm_squared
        weight_sum += weight
    return complex(total / weight_sum)


def _support(amplitudes: np.ndarray, axis: int) -> int:
    other = 1 - axis
    populated = np.nonzero(np.abs(amplitudes).sum(axis=other) > 0)[0]
    return int(populated[-1]) if populated.size else 0


def _displaced_parity(member: PureState, alpha: complex, beta: complex) -> float:
    psi = member.amplitudes
    sa, sb = _support(psi, 0), _support(psi, 1)
    psi = psi[:sa + 1, :sb + 1]
    norm2 = member.norm_squared
    extra = config.WIGNER_PADDING
    while True:
        rows_a = sa + 1 + extra + int(math.ceil(abs(alpha) ** 2 + 6 * abs(alpha)))
        rows_b = sb + 1 + extra + int(math.ceil(abs(beta) ** 2 + 6 * abs(beta)))
        da = displacement_matrix(-alpha, max(sa, 1), rows_a)[:, :sa + 1]
        db = displacement_matrix(-beta, max(sb, 1), rows_b)[:, :sb + 1]
        phi = da @ psi @ db.T
        probs = np.abs(phi) ** 2
        leaked = norm2 - probs.sum()
        if leaked < 1e-12 * norm2 or max(rows_a, rows_b) >= WIGNER_MAX_ROWS:
            break
        extra *= 2
    if leaked > 1e-10 * norm2:
        logger.warning(f"Wigner sum at ({alpha}, {beta}) lost {leaked / norm2:.3e} to truncation")
    sign_a = (-1.0) ** np.arange(probs.shape[0])
    sign_b = (-1.0) ** np.arange(probs.shape[1])
    return float(sign_a @ probs @ sign_b / norm2)


def wigner(state: State, p: PhasePoint) -> float:
    """Two-mode Wigner function (4/pi^2) <D_a Pi_a D_a^dag D_b Pi_b D_b^dag>"""
    _check_two_mode(state)
    members = _members(state)
    total = sum(w for w, _ in members)
    value = sum(w * _displaced_parity(m, p.alpha, p.beta) for w, m in members) / total
    return WIGNER_PREFACTOR * value
