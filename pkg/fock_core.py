"""
Truncated multi-mode Fock-space state algebra.

States are dense complex tensors indexed by photon numbers (n_1, ..., n_k),
one axis per mode, each axis running from 0 to that mode's cutoff inclusive.
Every object here is immutable once built; operations return new objects.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

import config

logger = logging.getLogger(__name__)

CREATE = 'create'
ANNIHILATE = 'annihilate'

# Upper bound on the tensor size we are willing to allocate
MAX_TENSOR_SIZE = 2 ** 31


class FockError(ValueError):
    """Invalid cutoffs, mode indices or incompatible states"""


class DimensionLimitError(FockError):
    """A reduced density matrix would exceed the configured dimension limit"""


class TruncationError(FockError):
    """The requested cutoff cannot hold the state within tolerance"""


@dataclass(frozen=True)
class FockCutoffs:
    """Per-mode maximum photon numbers (inclusive)"""
    per_mode: Tuple[int, ...]

    def __post_init__(self):
        per_mode = tuple(int(c) for c in self.per_mode)
        if not per_mode:
            raise FockError("At least one mode is required")
        if any(c < 1 for c in per_mode):
            raise FockError(f"Every cutoff must be >= 1, got {per_mode}")
        if math.prod(c + 1 for c in per_mode) > MAX_TENSOR_SIZE:
            raise FockError(f"Tensor dimension for cutoffs {per_mode} is too large")
        object.__setattr__(self, 'per_mode', per_mode)

    @property
    def n_modes(self) -> int:
        return len(self.per_mode)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(c + 1 for c in self.per_mode)

    @property
    def total_dimension(self) -> int:
        return math.prod(self.dims)

    def without(self, modes: Iterable[int]) -> 'FockCutoffs':
        drop = set(modes)
        return FockCutoffs(tuple(c for i, c in enumerate(self.per_mode) if i not in drop))

    def __len__(self):
        return len(self.per_mode)


def as_cutoffs(cutoffs: Union['FockCutoffs', Sequence[int]]) -> FockCutoffs:
    if isinstance(cutoffs, FockCutoffs):
        return cutoffs
    return FockCutoffs(tuple(cutoffs))


@dataclass(frozen=True, eq=False)
class PureState:
    """
    Complex amplitude tensor over a list of modes.

    truncation_loss accumulates the norm^2 that gates and ladder operators
    pushed above the cutoffs and therefore dropped.
    """
    cutoffs: FockCutoffs
    amplitudes: np.ndarray
    truncation_loss: float = 0.0

    def __post_init__(self):
        cutoffs = as_cutoffs(self.cutoffs)
        amplitudes = np.array(self.amplitudes, dtype=complex)
        if amplitudes.shape != cutoffs.dims:
            raise FockError(f"Amplitude shape {amplitudes.shape} does not match cutoffs {cutoffs.per_mode}")
        if not np.all(np.isfinite(amplitudes)):
            raise FockError("Amplitudes must be finite")
        amplitudes.setflags(write=False)
        object.__setattr__(self, 'cutoffs', cutoffs)
        object.__setattr__(self, 'amplitudes', amplitudes)

    @property
    def n_modes(self) -> int:
        return self.cutoffs.n_modes

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @property
    def normalized(self) -> bool:
        return abs(self.norm_squared - 1.0) < config.NORM_TOLERANCE

    def with_amplitudes(self, amplitudes: np.ndarray, extra_loss: float = 0.0) -> 'PureState':
        return PureState(self.cutoffs, amplitudes, self.truncation_loss + extra_loss)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Reduced density matrix on one or two modes"""
    cutoffs: FockCutoffs
    matrix: np.ndarray

    def __post_init__(self):
        cutoffs = as_cutoffs(self.cutoffs)
        matrix = np.array(self.matrix, dtype=complex)
        dim = cutoffs.total_dimension
        if matrix.shape != (dim, dim):
            raise FockError(f"Matrix shape {matrix.shape} does not match cutoffs {cutoffs.per_mode}")
        matrix.setflags(write=False)
        object.__setattr__(self, 'cutoffs', cutoffs)
        object.__setattr__(self, 'matrix', matrix)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.vdot(self.matrix, self.matrix).real)


@dataclass(frozen=True, eq=False)
class StateEnsemble:
    """
    Weighted pure-state decomposition of a (generally mixed) state.

    Weights are kept unnormalized so that heralding can carry success
    probabilities; normalized() rescales them to sum to one.
    """
    members: Tuple[Tuple[float, PureState], ...]

    def __post_init__(self):
        members = tuple((float(w), s) for w, s in self.members)
        if any(w < 0 or not np.isfinite(w) for w, _ in members):
            raise FockError("Ensemble weights must be finite and non-negative")
        if members:
            first = members[0][1].cutoffs
            if any(s.cutoffs != first for _, s in members):
                raise FockError("All ensemble members must share the same cutoffs")
        object.__setattr__(self, 'members', members)

    @classmethod
    def from_pure(cls, state: PureState) -> 'StateEnsemble':
        return cls(((1.0, state),))

    @property
    def total_weight(self) -> float:
        return float(sum(w for w, _ in self.members))

    @property
    def cutoffs(self) -> Optional[FockCutoffs]:
        return self.members[0][1].cutoffs if self.members else None

    @property
    def truncation_loss(self) -> float:
        total = self.total_weight
        if total == 0:
            return 0.0
        return float(sum(w * s.truncation_loss for w, s in self.members) / total)

    def __len__(self):
        return len(self.members)

    def normalized(self) -> 'StateEnsemble':
        total = self.total_weight
        if total <= 0:
            raise FockError("Cannot normalize an empty or zero-weight ensemble")
        return StateEnsemble(tuple((w / total, s) for w, s in self.members))

    def density_matrix(self) -> np.ndarray:
        """Full density matrix of the (normalized) ensemble"""
        dim = self.cutoffs.total_dimension
        if dim > config.MAX_DENSITY_DIM:
            raise DimensionLimitError(f"Density matrix dimension {dim} exceeds {config.MAX_DENSITY_DIM}")
        rho = np.zeros((dim, dim), dtype=complex)
        for weight, state in self.members:
            vec = state.amplitudes.reshape(-1)
            rho += weight * np.outer(vec, vec.conj()) / state.norm_squared
        return rho / self.total_weight

    def compressed(self, tolerance: float = config.ENSEMBLE_RANK_TOLERANCE) -> 'StateEnsemble':
        """
        Re-express the ensemble by the eigen-decomposition of its density
        matrix. The total weight is preserved; member count drops to the rank.
        """
        if len(self.members) <= 1:
            return self
        total = self.total_weight
        loss = self.truncation_loss
        eigenvalues, eigenvectors = np.linalg.eigh(self.density_matrix())
        members = []
        for k in np.argsort(eigenvalues)[::-1]:
            value = eigenvalues[k]
            if value <= tolerance:
                continue
            vec = eigenvectors[:, k].reshape(self.cutoffs.dims)
            members.append((float(value) * total, PureState(self.cutoffs, vec, loss)))
        logger.debug(f"Compressed ensemble from {len(self.members)} to {len(members)} members")
        return StateEnsemble(tuple(members))


def vacuum(cutoffs: Union[FockCutoffs, Sequence[int]]) -> PureState:
    cutoffs = as_cutoffs(cutoffs)
    amplitudes = np.zeros(cutoffs.dims, dtype=complex)
    amplitudes[(0,) * cutoffs.n_modes] = 1.0
    return PureState(cutoffs, amplitudes)


def fock_state(cutoffs: Union[FockCutoffs, Sequence[int]], occupation: Sequence[int]) -> PureState:
    cutoffs = as_cutoffs(cutoffs)
    if len(occupation) != cutoffs.n_modes:
        raise FockError(f"Occupation {tuple(occupation)} does not match {cutoffs.n_modes} modes")
    if any(n < 0 or n > c for n, c in zip(occupation, cutoffs.per_mode)):
        raise FockError(f"Occupation {tuple(occupation)} exceeds cutoffs {cutoffs.per_mode}")
    amplitudes = np.zeros(cutoffs.dims, dtype=complex)
    amplitudes[tuple(occupation)] = 1.0
    return PureState(cutoffs, amplitudes)


def normalize(state: PureState) -> PureState:
    norm2 = state.norm_squared
    if norm2 <= 0:
        raise FockError("Cannot normalize the zero vector")
    return state.with_amplitudes(state.amplitudes / math.sqrt(norm2))


def inner(left: PureState, right: PureState) -> complex:
    """<left|right>, zero-padding whichever state has the smaller cutoffs"""
    left, right = _common_cutoffs(left, right)
    return complex(np.vdot(left.amplitudes, right.amplitudes))


def _check_mode(state: PureState, mode: int):
    if not 0 <= mode < state.n_modes:
        raise FockError(f"Mode {mode} out of range for a {state.n_modes}-mode state")


def apply_ladder(state: PureState, mode: int, kind: str) -> PureState:
    """
    Apply a creation or annihilation operator on one mode.

    Creation on a component sitting at the cutoff drops it; the dropped
    norm^2 is added to the state's truncation_loss.
    """
    _check_mode(state, mode)
    cutoff = state.cutoffs.per_mode[mode]
    moved = np.moveaxis(state.amplitudes, mode, 0)
    out = np.zeros_like(moved)
    sqrt_n = np.sqrt(np.arange(1, cutoff + 1, dtype=float))
    shape = (-1,) + (1,) * (moved.ndim - 1)
    loss = 0.0
    if kind == ANNIHILATE:
        out[:-1] = sqrt_n.reshape(shape) * moved[1:]
    elif kind == CREATE:
        out[1:] = sqrt_n.reshape(shape) * moved[:-1]
        edge = moved[-1]
        loss = float((cutoff + 1) * np.vdot(edge, edge).real)
    else:
        raise FockError(f"Unknown ladder kind: {kind}")
    return state.with_amplitudes(np.moveaxis(out, 0, mode), loss)


def apply_number(state: PureState, mode: int) -> PureState:
    """n_mode |psi>"""
    _check_mode(state, mode)
    n = np.arange(state.cutoffs.per_mode[mode] + 1, dtype=float)
    shape = [1] * state.n_modes
    shape[mode] = -1
    return state.with_amplitudes(state.amplitudes * n.reshape(shape))


def apply_single_mode_operator(state: PureState, mode: int, matrix: np.ndarray) -> PureState:
    """Apply a (cutoff+1) x (cutoff+1) matrix to one mode"""
    _check_mode(state, mode)
    dim = state.cutoffs.dims[mode]
    if matrix.shape != (dim, dim):
        raise FockError(f"Operator shape {matrix.shape} does not match mode dimension {dim}")
    out = np.tensordot(matrix, state.amplitudes, axes=([1], [mode]))
    return state.with_amplitudes(np.moveaxis(out, 0, mode))


def apply_two_mode_operator(state: PureState, i: int, j: int, matrix: np.ndarray,
                            loss: float = 0.0) -> PureState:
    """Apply a matrix on the joint (i, j) space, flattened row-major as (n_i, n_j)"""
    _check_mode(state, i)
    _check_mode(state, j)
    if i == j:
        raise FockError("Two-mode operator needs two distinct modes")
    di, dj = state.cutoffs.dims[i], state.cutoffs.dims[j]
    moved = np.moveaxis(state.amplitudes, (i, j), (0, 1))
    rest = moved.shape[2:]
    flat = moved.reshape(di * dj, -1)
    out = (matrix @ flat).reshape((di, dj) + rest)
    return state.with_amplitudes(np.moveaxis(out, (0, 1), (i, j)), loss)


def tensor_vacuum(state: PureState, extra_cutoffs: Sequence[int]) -> PureState:
    """Append vacuum modes after the existing ones"""
    extra = vacuum(extra_cutoffs)
    amplitudes = np.multiply.outer(state.amplitudes, extra.amplitudes)
    cutoffs = FockCutoffs(state.cutoffs.per_mode + extra.cutoffs.per_mode)
    return PureState(cutoffs, amplitudes, state.truncation_loss)


def pad_state(state: PureState, cutoffs: Union[FockCutoffs, Sequence[int]]) -> PureState:
    """Embed the state into larger cutoffs with zero amplitudes"""
    cutoffs = as_cutoffs(cutoffs)
    if cutoffs.n_modes != state.n_modes:
        raise FockError(f"Cannot pad a {state.n_modes}-mode state to {cutoffs.n_modes} modes")
    if any(new < old for new, old in zip(cutoffs.per_mode, state.cutoffs.per_mode)):
        raise FockError(f"Cannot pad cutoffs {state.cutoffs.per_mode} down to {cutoffs.per_mode}")
    amplitudes = np.zeros(cutoffs.dims, dtype=complex)
    amplitudes[tuple(slice(0, d) for d in state.cutoffs.dims)] = state.amplitudes
    return PureState(cutoffs, amplitudes, state.truncation_loss)


def _common_cutoffs(left: PureState, right: PureState) -> Tuple[PureState, PureState]:
    if left.n_modes != right.n_modes:
        raise FockError(f"Incompatible mode counts: {left.n_modes} vs {right.n_modes}")
    if left.cutoffs == right.cutoffs:
        return left, right
    common = tuple(max(a, b) for a, b in zip(left.cutoffs.per_mode, right.cutoffs.per_mode))
    return pad_state(left, common), pad_state(right, common)


def _log_prefactor(u: float, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    """log of sqrt(low!/high!) * u^((high-low)/2)"""
    diff = high - low
    with np.errstate(divide='ignore', invalid='ignore'):
        power = np.where(diff == 0, 0.0, 0.5 * diff * np.log(u) if u > 0 else -np.inf)
    return 0.5 * (gammaln(low + 1) - gammaln(high + 1)) + power


def radial_displacement_factors(u: float, rows: int, cols: int) -> np.ndarray:
    """
    Real polynomial part r_mn(u) of the displacement matrix elements,
    <m|D(alpha)|n> = exp(-u/2) r_mn(u) exp(i phi (m - n)) with alpha = sqrt(u) e^{i phi}.
    """
    m = np.arange(rows).reshape(-1, 1)
    n = np.arange(cols).reshape(1, -1)
    low = np.minimum(m, n)
    high = np.maximum(m, n)
    diff = high - low
    laguerre = eval_genlaguerre(low, diff, u)
    sign = np.where((m < n) & (diff % 2 == 1), -1.0, 1.0)
    return sign * np.exp(_log_prefactor(u, low, high)) * laguerre


def displacement_matrix(alpha: complex, cutoff: int, rows: Optional[int] = None) -> np.ndarray:
    """
    Matrix elements <m|D(alpha)|n> for n <= cutoff and m < rows (default cutoff+1).

    The elements are the exact infinite-dimensional ones, so the matrix is
    unitary only in the limit of large cutoff.
    """
    if cutoff < 1:
        raise FockError(f"Cutoff must be >= 1, got {cutoff}")
    rows = cutoff + 1 if rows is None else rows
    return _displacement_cached(complex(alpha), int(cutoff), int(rows)).copy()


@lru_cache(maxsize=4096)
def _displacement_cached(alpha: complex, cutoff: int, rows: int) -> np.ndarray:
    u = abs(alpha) ** 2
    phase = np.angle(alpha)
    m = np.arange(rows).reshape(-1, 1)
    n = np.arange(cutoff + 1).reshape(1, -1)
    radial = radial_displacement_factors(u, rows, cutoff + 1)
    return np.exp(-u / 2) * radial * np.exp(1j * phase * (m - n))


def partial_trace(state: Union[PureState, StateEnsemble], keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on the kept modes (unit trace)"""
    ensemble = StateEnsemble.from_pure(state) if isinstance(state, PureState) else state
    if not ensemble.members:
        raise FockError("Cannot trace an empty ensemble")
    cutoffs = ensemble.cutoffs
    keep = list(keep)
    if not keep or len(set(keep)) != len(keep) or len(keep) >= cutoffs.n_modes:
        raise FockError(f"keep={keep} must be a nonempty strict subset of {cutoffs.n_modes} modes")
    if any(not 0 <= k < cutoffs.n_modes for k in keep):
        raise FockError(f"keep={keep} refers to missing modes")
    traced = [k for k in range(cutoffs.n_modes) if k not in keep]
    kept_cutoffs = FockCutoffs(tuple(cutoffs.per_mode[k] for k in keep))
    dim = kept_cutoffs.total_dimension
    if dim > config.MAX_DENSITY_DIM:
        raise DimensionLimitError(f"Reduced dimension {dim} exceeds {config.MAX_DENSITY_DIM}")

    rho = np.zeros((dim, dim), dtype=complex)
    for weight, member in ensemble.members:
        matrix = np.transpose(member.amplitudes, keep + traced).reshape(dim, -1)
        rho += weight * (matrix @ matrix.conj().T) / member.norm_squared
    rho /= ensemble.total_weight
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(kept_cutoffs, rho)


def fidelity_pure_vs_ensemble(target: PureState, rho: StateEnsemble) -> float:
    """<target|rho|target> for a normalized target and normalized ensemble"""
    if not rho.members:
        raise FockError("Fidelity against an empty ensemble is undefined")
    if target.n_modes != rho.cutoffs.n_modes:
        raise FockError(f"Incompatible mode counts: {target.n_modes} vs {rho.cutoffs.n_modes}")
    target = normalize(target)
    total = 0.0
    for weight, member in rho.members:
        overlap = inner(target, member)
        total += weight * abs(overlap) ** 2 / member.norm_squared
    return float(total / rho.total_weight)


def mode_photon_distribution(state: PureState, mode: int) -> np.ndarray:
    """P(n) on one mode"""
    _check_mode(state, mode)
    probs = np.abs(np.moveaxis(state.amplitudes, mode, 0)) ** 2
    return probs.reshape(probs.shape[0], -1).sum(axis=1) / state.norm_squared
