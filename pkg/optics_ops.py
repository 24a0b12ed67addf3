"""
Gate-level optical operations on truncated Fock states: beam splitters,
two-mode squeezers (NDPAs), phase rotations and heralding with on-off
detector POVMs.

Gates are built by exponentiating the ladder-operator generator on a padded
two-mode space and keeping the block that maps the state's cutoffs onto
themselves. Whatever norm the exact gate sends above the cutoffs is recorded
on the output state's truncation_loss.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

import config
from fock_core import (FockCutoffs, FockError, PureState, StateEnsemble, apply_single_mode_operator,
                       apply_two_mode_operator)

logger = logging.getLogger(__name__)


class HeraldError(RuntimeError):
    """Invalid herald pattern or a herald that can never fire"""


@dataclass(frozen=True)
class BeamSplitterParams:
    """
    Amplitude transmissivity t and reflectivity r.

    Convention: a_i^dag -> t a_i^dag - r a_j^dag, a_j^dag -> t a_j^dag + r a_i^dag
    for real t, r.
    """
    t: complex
    r: complex

    def __post_init__(self):
        t, r = complex(self.t), complex(self.r)
        if abs(abs(t) ** 2 + abs(r) ** 2 - 1.0) > config.NORM_TOLERANCE:
            raise FockError(f"Beam splitter needs |t|^2 + |r|^2 = 1, got t={t}, r={r}")
        object.__setattr__(self, 't', t)
        object.__setattr__(self, 'r', r)

    @classmethod
    def from_transmissivity(cls, t: float) -> 'BeamSplitterParams':
        """Real t in [-1, 1] with a non-negative real r"""
        if abs(t) > 1.0:
            raise FockError(f"Transmissivity must lie in [-1, 1], got {t}")
        return cls(t, math.sqrt(max(0.0, 1.0 - t * t)))

    @classmethod
    def from_angle(cls, theta: float, phi: float = 0.0) -> 'BeamSplitterParams':
        return cls(math.cos(theta), np.exp(1j * phi) * math.sin(theta))

    @property
    def theta(self) -> float:
        return math.acos(min(1.0, abs(self.t)))

    @property
    def phi(self) -> float:
        if abs(self.r) == 0:
            return 0.0
        return float(np.angle(self.r) - (np.angle(self.t) if abs(self.t) > 0 else 0.0))

    @property
    def global_phase(self) -> float:
        return float(np.angle(self.t)) if abs(self.t) > 0 else 0.0


@dataclass(frozen=True)
class SqueezerParams:
    """Two-mode squeezing xi = s e^{i phi}"""
    s: float
    phi: float = 0.0

    def __post_init__(self):
        if self.s < 0 or not math.isfinite(self.s):
            raise FockError(f"Squeezing magnitude must be finite and >= 0, got {self.s}")

    @property
    def xi(self) -> complex:
        return self.s * np.exp(1j * self.phi)


@dataclass(frozen=True)
class OnOffDetector:
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise FockError(f"Detector efficiency must lie in [0, 1], got {self.eta}")

    def no_click_factors(self, cutoff: int) -> np.ndarray:
        return np.power(1.0 - self.eta, np.arange(cutoff + 1, dtype=float))


class Outcome(str, Enum):
    CLICK = 'click'
    NO_CLICK = 'no_click'
    # exact Fock projections, for ideal-detector variants
    SINGLE_PHOTON = 'single_photon'
    VACUUM = 'vacuum'


@dataclass(frozen=True)
class HeraldOutcome:
    mode: int
    detector: OnOffDetector
    outcome: Outcome

    def factors(self, cutoff: int) -> np.ndarray:
        """POVM diagonal <n|Pi|n> for n = 0..cutoff"""
        outcome = Outcome(self.outcome)
        if outcome == Outcome.NO_CLICK:
            return self.detector.no_click_factors(cutoff)
        if outcome == Outcome.CLICK:
            return 1.0 - self.detector.no_click_factors(cutoff)
        projector = np.zeros(cutoff + 1)
        projector[0 if outcome == Outcome.VACUUM else 1] = 1.0
        return projector


def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)


def _box_indices(ci: int, cj: int, dj: int) -> np.ndarray:
    ni, nj = np.meshgrid(np.arange(ci + 1), np.arange(cj + 1), indexing='ij')
    return (ni * dj + nj).reshape(-1)


@lru_cache(maxsize=512)
def _beam_splitter_block(ci: int, cj: int, theta: float, phi: float, chi: float) -> np.ndarray:
    # padding each mode by the other's cutoff keeps every photon-number sector whole
    di, dj = ci + cj + 1, ci + cj + 1
    a = np.kron(_ladder(di), np.eye(dj))
    b = np.kron(np.eye(di), _ladder(dj))
    generator = theta * (np.exp(-1j * phi) * (a.conj().T @ b) - np.exp(1j * phi) * (a @ b.conj().T))
    unitary = expm(generator)
    if chi != 0.0:
        total = np.add.outer(np.arange(di), np.arange(dj)).reshape(-1)
        unitary = np.exp(1j * chi * total)[:, None] * unitary
    box = _box_indices(ci, cj, dj)
    return unitary[np.ix_(box, box)]


@lru_cache(maxsize=512)
def _squeezer_block(ci: int, cj: int, xi: complex) -> np.ndarray:
    di, dj = ci + 1 + config.GATE_PADDING, cj + 1 + config.GATE_PADDING
    a = np.kron(_ladder(di), np.eye(dj))
    b = np.kron(np.eye(di), _ladder(dj))
    generator = -xi * (a.conj().T @ b.conj().T) + np.conj(xi) * (a @ b)
    unitary = expm(generator)
    box = _box_indices(ci, cj, dj)
    return unitary[np.ix_(box, box)]


def _apply_block(state: PureState, i: int, j: int, block: np.ndarray, label: str) -> PureState:
    before = state.norm_squared
    out = apply_two_mode_operator(state, i, j, block)
    loss = max(0.0, before - out.norm_squared)
    if loss > config.TRUNCATION_LOSS_CEILING:
        logger.warning(f"{label} on modes ({i}, {j}) lost {loss:.3e} of norm^2 to truncation")
    else:
        logger.debug(f"{label} on modes ({i}, {j}), truncation loss {loss:.3e}")
    return out.with_amplitudes(out.amplitudes, loss)


def apply_beam_splitter(state: PureState, i: int, j: int, p: BeamSplitterParams) -> PureState:
    """
    Unitary beam splitter between modes i and j, for real t and r:
    a_i^dag -> t a_i^dag - r a_j^dag, a_j^dag -> t a_j^dag + r a_i^dag.
    Swapping i and j flips the sign of r.
    """
    if i == j:
        raise FockError("Beam splitter needs two distinct modes")
    ci, cj = state.cutoffs.per_mode[i], state.cutoffs.per_mode[j]
    block = _beam_splitter_block(ci, cj, p.theta, p.phi, p.global_phase)
    return _apply_block(state, i, j, block, 'Beam splitter')


def apply_two_mode_squeezer(state: PureState, i: int, j: int, p: SqueezerParams,
                            inverse: bool = False) -> PureState:
    """exp(-xi a_i^dag a_j^dag + xi^* a_i a_j), or its inverse (xi -> -xi)"""
    if i == j:
        raise FockError("Two-mode squeezer needs two distinct modes")
    if p.s == 0:
        return state
    ci, cj = state.cutoffs.per_mode[i], state.cutoffs.per_mode[j]
    xi = -p.xi if inverse else p.xi
    block = _squeezer_block(ci, cj, complex(xi))
    return _apply_block(state, i, j, block, 'Inverse squeezer' if inverse else 'Squeezer')


def apply_phase_rotation(state: PureState, mode: int, theta: float) -> PureState:
    """exp(i theta n) on one mode"""
    n = np.arange(state.cutoffs.per_mode[mode] + 1)
    return apply_single_mode_operator(state, mode, np.diag(np.exp(1j * theta * n)))


def click_probability(state: PureState, mode: int, detector: OnOffDetector) -> float:
    """<Pi_1> on one mode"""
    moved = np.moveaxis(state.amplitudes, mode, 0)
    populations = (np.abs(moved) ** 2).reshape(moved.shape[0], -1).sum(axis=1)
    no_click = float(np.dot(detector.no_click_factors(len(populations) - 1), populations))
    return (state.norm_squared - no_click) / state.norm_squared


def _check_pattern(state: PureState, outcomes: Sequence[HeraldOutcome],
                   keep: Optional[Sequence[int]]) -> List[int]:
    heralded = [o.mode for o in outcomes]
    if len(set(heralded)) != len(heralded):
        raise HeraldError(f"Heralded modes must be distinct, got {heralded}")
    if any(not 0 <= m < state.n_modes for m in heralded):
        raise HeraldError(f"Heralded modes {heralded} out of range for {state.n_modes} modes")
    if keep is None:
        keep = [m for m in range(state.n_modes) if m not in heralded]
    keep = list(keep)
    if set(keep) & set(heralded):
        raise HeraldError(f"Kept modes {keep} overlap heralded modes {heralded}")
    if sorted(keep + heralded) != list(range(state.n_modes)):
        raise HeraldError(f"Kept modes {keep} and heralded modes {heralded} must cover all modes exactly")
    if not keep:
        raise HeraldError("At least one mode must survive heralding")
    return keep


def herald(state: PureState, outcomes: Sequence[HeraldOutcome],
           keep: Optional[Sequence[int]] = None) -> Tuple[StateEnsemble, float]:
    """
    Condition on a detector pattern and remove the heralded modes.

    Each joint Fock outcome of the heralded modes with a nonzero POVM weight
    becomes one ensemble member; its weight is the POVM factor times the
    norm^2 of the corresponding slice. The success probability is the total
    weight and the ensemble is returned unnormalized.
    """
    keep = _check_pattern(state, outcomes, keep)
    heralded = [o.mode for o in outcomes]
    tensor = np.transpose(state.amplitudes, heralded + keep)
    kept_cutoffs = FockCutoffs(tuple(state.cutoffs.per_mode[k] for k in keep))
    factors = [o.factors(state.cutoffs.per_mode[o.mode]) for o in outcomes]

    members = []
    for occupation in itertools.product(*(range(len(f)) for f in factors)):
        factor = math.prod(f[n] for f, n in zip(factors, occupation))
        if factor <= 0:
            continue
        branch = tensor[occupation]
        norm2 = float(np.vdot(branch, branch).real)
        if norm2 <= 0:
            continue
        member = PureState(kept_cutoffs, branch / math.sqrt(norm2), state.truncation_loss)
        members.append((factor * norm2, member))

    ensemble = StateEnsemble(tuple(members))
    probability = ensemble.total_weight
    pattern = ', '.join(f"{o.mode}:{Outcome(o.outcome).value}" for o in outcomes)
    logger.debug(f"Herald [{pattern}] -> {len(members)} members, probability {probability:.4e}")
    return ensemble, probability


def herald_ensemble(ensemble: StateEnsemble, outcomes: Sequence[HeraldOutcome],
                    keep: Optional[Sequence[int]] = None) -> Tuple[StateEnsemble, float]:
    """Herald a mixed input member by member; probability is relative to the input weight"""
    members = []
    for weight, state in ensemble.members:
        sub, _ = herald(state, outcomes, keep)
        scale = weight / state.norm_squared
        members.extend((scale * w, s) for w, s in sub.members)
    result = StateEnsemble(tuple(members))
    total = ensemble.total_weight
    probability = result.total_weight / total if total > 0 else 0.0
    return result, probability


def apply_gate_to_ensemble(ensemble: StateEnsemble, gate, *args, **kwargs) -> StateEnsemble:
    """Apply a pure-state gate function to every member, weights unchanged"""
    return StateEnsemble(tuple((w, gate(s, *args, **kwargs)) for w, s in ensemble.members))
