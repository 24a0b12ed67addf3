"""
PNES and TMSS constructors, plus the ideal coherent-superposition operators
used as analytic references for the heralded circuits.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln

import config
from fock_core import (ANNIHILATE, CREATE, FockCutoffs, FockError, PureState, TruncationError,
                       apply_ladder, apply_number, normalize, vacuum)
from optics_ops import SqueezerParams

logger = logging.getLogger(__name__)


class CoefficientError(ValueError):
    """Coefficients that are not a valid PNES, or a state that is not one"""


@dataclass(frozen=True, eq=False)
class PnesCoefficients:
    """Normalized C_0..C_N of sum_n C_n |n>|n>"""
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex).reshape(-1)
        if coeffs.size == 0:
            raise CoefficientError("At least one coefficient is required")
        norm2 = float(np.vdot(coeffs, coeffs).real)
        if abs(norm2 - 1.0) > config.NORM_TOLERANCE:
            raise CoefficientError(f"Coefficients must be normalized, got norm^2 = {norm2}")
        coeffs.setflags(write=False)
        object.__setattr__(self, 'coeffs', coeffs)

    @property
    def N(self) -> int:
        return self.coeffs.size - 1

    def magnitudes(self) -> List[float]:
        return [float(abs(c)) for c in self.coeffs]

    def __len__(self):
        return self.coeffs.size


@dataclass(frozen=True)
class CoherentOpParams:
    """t a a^dag + r a^dag a, sandwiched by a two-mode squeezer when squeeze is set"""
    t: complex
    r: complex
    squeeze: Optional[SqueezerParams] = None

    def __post_init__(self):
        if abs(abs(self.t) ** 2 + abs(self.r) ** 2 - 1.0) > config.NORM_TOLERANCE:
            raise CoefficientError(f"Need |t|^2 + |r|^2 = 1, got t={self.t}, r={self.r}")

    @classmethod
    def from_reflectivity(cls, r: float, t_sign: float = 1.0,
                          squeeze: Optional[SqueezerParams] = None) -> 'CoherentOpParams':
        if abs(r) > 1.0:
            raise CoefficientError(f"Reflectivity must lie in [-1, 1], got {r}")
        t = math.copysign(math.sqrt(max(0.0, 1.0 - r * r)), t_sign)
        return cls(t, r, squeeze)


def normalize_coeffs(values: Sequence[complex]) -> PnesCoefficients:
    values = np.asarray(values, dtype=complex)
    norm = math.sqrt(float(np.vdot(values, values).real))
    if norm == 0:
        raise CoefficientError("Cannot normalize all-zero coefficients")
    return PnesCoefficients(values / norm)


def equal_pnes(N: int) -> PnesCoefficients:
    return normalize_coeffs(np.ones(N + 1))


def _two_mode_cutoffs(cutoffs: Union[int, Sequence[int], FockCutoffs]) -> FockCutoffs:
    if isinstance(cutoffs, FockCutoffs):
        result = cutoffs
    elif isinstance(cutoffs, int):
        result = FockCutoffs((cutoffs, cutoffs))
    else:
        result = FockCutoffs(tuple(cutoffs))
    if result.n_modes != 2:
        raise FockError(f"Expected two modes, got cutoffs {result.per_mode}")
    return result


def make_pnes(c: PnesCoefficients, cutoffs: Union[int, Sequence[int], FockCutoffs]) -> PureState:
    cutoffs = _two_mode_cutoffs(cutoffs)
    if c.N > min(cutoffs.per_mode):
        raise CoefficientError(f"N={c.N} exceeds cutoffs {cutoffs.per_mode}")
    amplitudes = np.zeros(cutoffs.dims, dtype=complex)
    n = np.arange(c.N + 1)
    amplitudes[n, n] = c.coeffs
    return PureState(cutoffs, amplitudes)


def tmss_cutoff_for(s: float, tolerance: float = config.TMSS_TAIL_TOLERANCE) -> int:
    """
    Smallest cutoff whose discarded TMSS amplitude norm lambda^(c+1) is below
    tolerance. Fidelities computed on the truncated state err by this norm.
    """
    lam = math.tanh(s)
    if lam == 0:
        return 1
    return max(1, math.floor(math.log(tolerance) / math.log(lam)))


def tmss_coefficients(s: float, cutoff: int) -> np.ndarray:
    lam = math.tanh(s)
    return lam ** np.arange(cutoff + 1) * math.sqrt(1.0 - lam * lam)


def make_tmss(s: float, cutoff: Optional[int] = None,
              tolerance: float = config.TMSS_TAIL_TOLERANCE) -> PureState:
    """Truncated two-mode squeezed vacuum, renormalized, C_n = lambda^n sqrt(1 - lambda^2)"""
    if s < 0:
        raise CoefficientError(f"Squeezing must be >= 0, got {s}")
    if cutoff is None:
        cutoff = tmss_cutoff_for(s, tolerance)
    tail = math.tanh(s) ** (cutoff + 1)
    if tail >= tolerance:
        raise TruncationError(f"Cutoff {cutoff} leaves TMSS tail {tail:.3e} for s={s}; "
                              f"need at least {tmss_cutoff_for(s, tolerance)}")
    return make_pnes(normalize_coeffs(tmss_coefficients(s, cutoff)), cutoff)


def make_pair_coherent(zeta: complex, cutoff: int) -> PureState:
    """Pair-coherent state truncated at cutoff, C_n ~ zeta^n / n!"""
    n = np.arange(cutoff + 1)
    if zeta == 0:
        return vacuum((cutoff, cutoff))
    log_mag = n * math.log(abs(zeta)) - gammaln(n + 1)
    values = np.exp(log_mag - log_mag.max()) * np.exp(1j * np.angle(zeta) * n)
    return make_pnes(normalize_coeffs(values), cutoff)


def _check_two_mode(state: PureState):
    if state.n_modes != 2:
        raise FockError(f"Expected a two-mode state, got {state.n_modes} modes")


def apply_ideal_On(state: PureState, p: CoherentOpParams) -> PureState:
    """
    A + (t+r)(n_a cosh^2 s + n_b sinh^2 s) - (t+r) cosh s sinh s (e^{-i phi} a b + e^{i phi} a^dag b^dag)
    with A = t cosh^2 s + r sinh^2 s. Without squeezing this is t a a^dag + r a^dag a.
    """
    return apply_On_linear(state, p.t, p.r, p.squeeze)


def apply_On_linear(state: PureState, t: complex, r: complex,
                    squeeze: Optional[SqueezerParams] = None) -> PureState:
    """The same operator for arbitrary (unnormalized) t and r; linear in both"""
    _check_two_mode(state)
    squeeze = squeeze or SqueezerParams(0.0)
    ch, sh = math.cosh(squeeze.s), math.sinh(squeeze.s)
    total = t + r
    A = t * ch ** 2 + r * sh ** 2

    amplitudes = A * state.amplitudes
    amplitudes = amplitudes + total * ch ** 2 * apply_number(state, 0).amplitudes
    loss = 0.0
    if sh != 0:
        amplitudes = amplitudes + total * sh ** 2 * apply_number(state, 1).amplitudes
        lowered = apply_ladder(apply_ladder(state, 1, ANNIHILATE), 0, ANNIHILATE)
        raised = apply_ladder(apply_ladder(state, 1, CREATE), 0, CREATE)
        loss = raised.truncation_loss - state.truncation_loss
        pair = np.exp(-1j * squeeze.phi) * lowered.amplitudes + np.exp(1j * squeeze.phi) * raised.amplitudes
        amplitudes = amplitudes - total * ch * sh * pair
    return state.with_amplitudes(amplitudes, loss)


def apply_ideal_Oprime(state: PureState, p1: CoherentOpParams, p2: CoherentOpParams) -> PureState:
    """(t_2 a + r_2 b^dag)(t_1 b + r_1 a^dag) on modes (a, b) = (0, 1)"""
    return apply_Oprime_linear(state, p1.t, p1.r, p2.t, p2.r)


def apply_Oprime_linear(state: PureState, t1: complex, r1: complex,
                        t2: complex, r2: complex) -> PureState:
    _check_two_mode(state)
    inner_create = apply_ladder(state, 0, CREATE)
    inner = state.with_amplitudes(
        t1 * apply_ladder(state, 1, ANNIHILATE).amplitudes + r1 * inner_create.amplitudes,
        inner_create.truncation_loss - state.truncation_loss)
    outer_create = apply_ladder(inner, 1, CREATE)
    return inner.with_amplitudes(
        t2 * apply_ladder(inner, 0, ANNIHILATE).amplitudes + r2 * outer_create.amplitudes,
        outer_create.truncation_loss - inner.truncation_loss)


def ideal_On_sequence(params: Sequence[CoherentOpParams], cutoff: int) -> PureState:
    """normalize(O_N ... O_1 |00>), first element applied first"""
    state = vacuum((cutoff, cutoff))
    for p in params:
        state = apply_ideal_On(state, p)
    return normalize(state)


def ideal_Oprime_sequence(params: Sequence[Tuple[CoherentOpParams, CoherentOpParams]],
                          cutoff: int) -> PureState:
    state = vacuum((cutoff, cutoff))
    for p1, p2 in params:
        state = apply_ideal_Oprime(state, p1, p2)
    return normalize(state)


def coefficients_of(state: PureState) -> PnesCoefficients:
    """Diagonal coefficients, phase fixed so the largest one is real positive"""
    _check_two_mode(state)
    norm2 = state.norm_squared
    if norm2 <= 0:
        raise CoefficientError("Zero state has no coefficients")
    size = min(state.cutoffs.dims)
    n = np.arange(size)
    diagonal = state.amplitudes[n, n]
    off_diagonal = norm2 - float(np.vdot(diagonal, diagonal).real)
    if off_diagonal > config.DIAGONAL_SUPPORT_TOLERANCE * norm2:
        raise CoefficientError(f"State has off-diagonal weight {off_diagonal / norm2:.3e}")
    # trailing zeros carry no information about N
    nonzero = np.nonzero(np.abs(diagonal) > 0)[0]
    diagonal = diagonal[:nonzero[-1] + 1]
    return canonical_phase(normalize_coeffs(diagonal))


def canonical_phase(c: PnesCoefficients) -> PnesCoefficients:
    k = int(np.argmax(np.abs(c.coeffs)))
    phase = np.exp(-1j * np.angle(c.coeffs[k]))
    return PnesCoefficients(c.coeffs * phase)


def coefficient_fidelity(left: PnesCoefficients, right: PnesCoefficients) -> float:
    """|<left|right>|^2 for the corresponding PNES states"""
    size = max(len(left), len(right))
    a = np.zeros(size, dtype=complex)
    b = np.zeros(size, dtype=complex)
    a[:len(left)] = left.coeffs
    b[:len(right)] = right.coeffs
    return float(abs(np.vdot(a, b)) ** 2)
