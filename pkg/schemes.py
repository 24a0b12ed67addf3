"""
Heralded generation circuits for PNES.

Scheme 1 applies S_ab^dag B_cd B_ad S_ae B_ac S_ab (right to left) and heralds
no click on c, a click on d and a click on e. Scheme 2 applies
B_ef P_e B_ae S_bf B_cd P_d B_bd S_ac and heralds c/d after its first half and
e/f after its second; P_d and P_e are phase shifters that make the odd and
even operators complex. Signal modes are a and b; ancillas enter in vacuum
when a gate first touches them and are removed as soon as their detectors fire.

The default detector model resolves a heralding click as exactly one photon
and treats a required no-click as an on-off detector of efficiency eta.
"""

import dataclasses
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import config
from fock_core import (DimensionLimitError, PureState, StateEnsemble, TruncationError,
                       fidelity_pure_vs_ensemble, tensor_vacuum, vacuum)
from optics_ops import (BeamSplitterParams, HeraldError, HeraldOutcome, OnOffDetector, Outcome,
                        SqueezerParams, apply_beam_splitter, apply_gate_to_ensemble,
                        apply_phase_rotation, apply_two_mode_squeezer, herald_ensemble)
from optimizer import OptimizerConfig, minimize
from pnes_states import (CoefficientError, CoherentOpParams, PnesCoefficients, apply_On_linear,
                         apply_Oprime_linear, canonical_phase, ideal_On_sequence,
                         ideal_Oprime_sequence, make_pnes, normalize_coeffs)

logger = logging.getLogger(__name__)

SIGNAL_MODES = ('a', 'b')

SQUEEZE = 'squeeze'
UNSQUEEZE = 'unsqueeze'
BEAM_SPLITTER = 'beam_splitter'
PHASE = 'phase'
HERALD = 'herald'

SINGLE_CLICK = 'single_click'
ON_OFF = 'on_off'
PHOTON_NUMBER = 'photon_number'
DETECTOR_MODELS = (SINGLE_CLICK, ON_OFF, PHOTON_NUMBER)

PD1_CLICK = 'pd1_click'
PD2_CLICK = 'pd2_click'
PD1, PD2, PD3, PD4 = 'pd1', 'pd2', 'pd3', 'pd4'


@dataclass(frozen=True)
class CircuitCutoffs:
    signal: int = config.DEFAULT_SIGNAL_CUTOFF
    ancilla: int = config.DEFAULT_ANCILLA_CUTOFF

    def __post_init__(self):
        if self.signal < 1 or self.ancilla < 2:
            raise ValueError(f"Need signal cutoff >= 1 and ancilla cutoff >= 2, got {self}")

    def raised(self, step: int) -> 'CircuitCutoffs':
        return CircuitCutoffs(self.signal + step, self.ancilla + step)


@dataclass(frozen=True)
class Scheme1StageParams:
    xi: SqueezerParams
    s_tap: float
    T1: float
    T2: float
    t_n: float
    branch: str = PD1_CLICK

    def __post_init__(self):
        if not (0 < self.T1 <= 1 and 0 < self.T2 <= 1):
            raise ValueError(f"T1, T2 must lie in (0, 1], got {self.T1}, {self.T2}")
        if abs(self.t_n) > 1 or self.s_tap < 0:
            raise ValueError(f"Need |t_n| <= 1 and s_tap >= 0, got {self.t_n}, {self.s_tap}")
        if self.branch not in (PD1_CLICK, PD2_CLICK):
            raise ValueError(f"Unknown branch {self.branch}")


@dataclass(frozen=True)
class Scheme2StageParams:
    s1: float
    s2: float
    T1: float
    T2: float
    t_odd: float
    t_even: float
    branch_first: str = PD1
    branch_second: str = PD3
    # phase shifts on d and e ahead of BS3 and BS4
    phase_odd: float = 0.0
    phase_even: float = 0.0

    def __post_init__(self):
        if not (0 < self.T1 <= 1 and 0 < self.T2 <= 1):
            raise ValueError(f"T1, T2 must lie in (0, 1], got {self.T1}, {self.T2}")
        if abs(self.t_odd) > 1 or abs(self.t_even) > 1:
            raise ValueError(f"Need |t_odd|, |t_even| <= 1, got {self.t_odd}, {self.t_even}")
        if self.s1 < 0 or self.s2 < 0:
            raise ValueError(f"Couplings must be >= 0, got {self.s1}, {self.s2}")
        if self.branch_first not in (PD1, PD2) or self.branch_second not in (PD3, PD4):
            raise ValueError(f"Unknown branches {self.branch_first}, {self.branch_second}")


@dataclass(frozen=True)
class CircuitOp:
    kind: str
    modes: Tuple[str, ...]
    squeezer: Optional[SqueezerParams] = None
    splitter: Optional[BeamSplitterParams] = None
    outcomes: Tuple[Outcome, ...] = ()
    phase: float = 0.0


@dataclass
class SchemeResult:
    output: StateEnsemble
    success_probability: float
    fidelity_vs_target: Optional[float] = None
    truncation_loss: float = 0.0
    stage_probabilities: List[float] = field(default_factory=list)


@dataclass(frozen=True)
class Regime:
    """Experimental settings shared by every stage of a scheme"""
    eta: float = config.FEASIBILITY_ETA
    coupling: float = config.FEASIBILITY_COUPLING
    t_squared: float = config.FEASIBILITY_T_SQUARED
    detector_model: str = SINGLE_CLICK
    alternate_branch: bool = False

    @property
    def T(self) -> float:
        return math.sqrt(self.t_squared)


def _detector_outcomes(detector_model: str) -> Tuple[Outcome, Outcome]:
    """(click, no click) outcomes for a detector model"""
    if detector_model == SINGLE_CLICK:
        return Outcome.SINGLE_PHOTON, Outcome.NO_CLICK
    if detector_model == ON_OFF:
        return Outcome.CLICK, Outcome.NO_CLICK
    if detector_model == PHOTON_NUMBER:
        return Outcome.SINGLE_PHOTON, Outcome.VACUUM
    raise ValueError(f"Unknown detector model: {detector_model}")


def _pattern(defaults: Dict[str, Outcome], override: Optional[Dict[str, Outcome]]) -> Dict[str, Outcome]:
    outcomes = dict(defaults)
    for mode, outcome in (override or {}).items():
        if mode not in outcomes:
            raise HeraldError(f"Mode {mode} is not heralded in this circuit")
        outcomes[mode] = Outcome(outcome)
    return outcomes


def scheme1_circuit(stage: Scheme1StageParams, detector_model: str = SINGLE_CLICK,
                    pattern: Optional[Dict[str, Outcome]] = None) -> List[CircuitOp]:
    click, dark = _detector_outcomes(detector_model)
    c_out, d_out = (dark, click) if stage.branch == PD1_CLICK else (click, dark)
    outcomes = _pattern({'c': c_out, 'd': d_out, 'e': click}, pattern)
    return [
        CircuitOp(SQUEEZE, ('a', 'b'), squeezer=stage.xi),
        CircuitOp(BEAM_SPLITTER, ('a', 'c'), splitter=BeamSplitterParams.from_transmissivity(stage.T1)),
        CircuitOp(SQUEEZE, ('a', 'e'), squeezer=SqueezerParams(stage.s_tap)),
        CircuitOp(HERALD, ('e',), outcomes=(outcomes['e'],)),
        CircuitOp(BEAM_SPLITTER, ('a', 'd'), splitter=BeamSplitterParams.from_transmissivity(stage.T2)),
        # c^dag -> t c^dag + r d^dag, d^dag -> t d^dag - r c^dag
        CircuitOp(BEAM_SPLITTER, ('d', 'c'), splitter=BeamSplitterParams.from_transmissivity(stage.t_n)),
        CircuitOp(HERALD, ('c', 'd'), outcomes=(outcomes['c'], outcomes['d'])),
        CircuitOp(UNSQUEEZE, ('a', 'b'), squeezer=stage.xi),
    ]


def scheme2_circuit(stage: Scheme2StageParams, detector_model: str = SINGLE_CLICK,
                    pattern: Optional[Dict[str, Outcome]] = None) -> List[CircuitOp]:
    click, dark = _detector_outcomes(detector_model)
    c_out, d_out = (dark, click) if stage.branch_first == PD1 else (click, dark)
    e_out, f_out = (dark, click) if stage.branch_second == PD3 else (click, dark)
    outcomes = _pattern({'c': c_out, 'd': d_out, 'e': e_out, 'f': f_out}, pattern)
    return [
        CircuitOp(SQUEEZE, ('a', 'c'), squeezer=SqueezerParams(stage.s1)),
        CircuitOp(BEAM_SPLITTER, ('b', 'd'), splitter=BeamSplitterParams.from_transmissivity(stage.T1)),
        CircuitOp(PHASE, ('d',), phase=stage.phase_odd),
        CircuitOp(BEAM_SPLITTER, ('d', 'c'), splitter=BeamSplitterParams.from_transmissivity(stage.t_odd)),
        CircuitOp(HERALD, ('c', 'd'), outcomes=(outcomes['c'], outcomes['d'])),
        CircuitOp(SQUEEZE, ('b', 'f'), squeezer=SqueezerParams(stage.s2)),
        CircuitOp(BEAM_SPLITTER, ('a', 'e'), splitter=BeamSplitterParams.from_transmissivity(stage.T2)),
        CircuitOp(PHASE, ('e',), phase=stage.phase_even),
        # f^dag -> t f^dag - r e^dag, e^dag -> t e^dag + r f^dag
        CircuitOp(BEAM_SPLITTER, ('f', 'e'), splitter=BeamSplitterParams.from_transmissivity(stage.t_even)),
        CircuitOp(HERALD, ('e', 'f'), outcomes=(outcomes['e'], outcomes['f'])),
    ]


def _compress(ensemble: StateEnsemble) -> StateEnsemble:
    if ensemble.cutoffs.total_dimension > config.MAX_DENSITY_DIM:
        return ensemble
    try:
        return ensemble.compressed()
    except DimensionLimitError:
        return ensemble


def run_circuit(ops: Sequence[CircuitOp], ensemble: StateEnsemble, names: Sequence[str],
                cutoffs: CircuitCutoffs, eta: float) -> Tuple[StateEnsemble, List[str], float]:
    """
    Interpret a gate/herald list over a normalized ensemble with named modes.

    Returns the normalized conditional ensemble, the surviving mode names and
    the probability that every herald fired. A herald that cannot fire gives
    an empty ensemble and probability 0.
    """
    names = list(names)
    detector = OnOffDetector(eta)
    probability = 1.0
    for op in ops:
        for mode in op.modes:
            if mode not in names:
                ensemble = StateEnsemble(tuple((w, tensor_vacuum(s, [cutoffs.ancilla]))
                                               for w, s in ensemble.members))
                names.append(mode)
        index = [names.index(m) for m in op.modes]

        if op.kind == SQUEEZE:
            ensemble = apply_gate_to_ensemble(ensemble, apply_two_mode_squeezer, index[0], index[1], op.squeezer)
        elif op.kind == UNSQUEEZE:
            ensemble = apply_gate_to_ensemble(ensemble, apply_two_mode_squeezer, index[0], index[1],
                                              op.squeezer, inverse=True)
        elif op.kind == BEAM_SPLITTER:
            ensemble = apply_gate_to_ensemble(ensemble, apply_beam_splitter, index[0], index[1], op.splitter)
        elif op.kind == PHASE:
            if op.phase != 0:
                ensemble = apply_gate_to_ensemble(ensemble, apply_phase_rotation, index[0], op.phase)
        elif op.kind == HERALD:
            outcomes = [HeraldOutcome(i, detector, o) for i, o in zip(index, op.outcomes)]
            ensemble, p = herald_ensemble(ensemble, outcomes)
            names = [n for n in names if n not in op.modes]
            probability *= p
            if p <= 0:
                logger.debug(f"Herald on {op.modes} cannot fire")
                return ensemble, names, 0.0
            ensemble = _compress(ensemble.normalized())
        else:
            raise ValueError(f"Unknown circuit operation: {op.kind}")
    return ensemble, names, probability


def _run_stages(circuits: Sequence[List[CircuitOp]], eta: float, cutoffs: CircuitCutoffs,
                target: Optional[PnesCoefficients], label: str) -> SchemeResult:
    ensemble = StateEnsemble.from_pure(vacuum((cutoffs.signal, cutoffs.signal)))
    names = list(SIGNAL_MODES)
    stage_probabilities = []
    for k, ops in enumerate(circuits, start=1):
        ensemble, names, p = run_circuit(ops, ensemble, names, cutoffs, eta)
        if p <= 0:
            raise HeraldError(f"{label} stage {k}: herald pattern has zero probability")
        stage_probabilities.append(p)
        logger.debug(f"{label} stage {k}: probability {p:.4e}, {len(ensemble)} members")
    if tuple(names) != SIGNAL_MODES:
        raise HeraldError(f"{label}: ancilla modes {names[2:]} were never heralded")

    loss = ensemble.truncation_loss
    if loss > config.TRUNCATION_LOSS_CEILING:
        raise TruncationError(f"{label}: truncation loss {loss:.3e} exceeds "
                              f"{config.TRUNCATION_LOSS_CEILING:.1e}; raise the cutoffs")
    fidelity = None
    if target is not None:
        fidelity = fidelity_pure_vs_ensemble(make_pnes(target, cutoffs.signal), ensemble)
    return SchemeResult(output=ensemble, success_probability=float(math.prod(stage_probabilities)),
                        fidelity_vs_target=fidelity, truncation_loss=loss,
                        stage_probabilities=stage_probabilities)


def scheme1_run(stages: Sequence[Scheme1StageParams], eta: float,
                cutoffs: CircuitCutoffs = CircuitCutoffs(), detector_model: str = SINGLE_CLICK,
                target: Optional[PnesCoefficients] = None) -> SchemeResult:
    if not stages:
        raise ValueError("At least one stage is required")
    circuits = [scheme1_circuit(stage, detector_model) for stage in stages]
    return _run_stages(circuits, eta, cutoffs, target, 'Scheme 1')


def scheme2_run(stages: Sequence[Scheme2StageParams], eta: float,
                cutoffs: CircuitCutoffs = CircuitCutoffs(), detector_model: str = SINGLE_CLICK,
                target: Optional[PnesCoefficients] = None) -> SchemeResult:
    if not stages:
        raise ValueError("At least one stage is required")
    circuits = [scheme2_circuit(stage, detector_model) for stage in stages]
    return _run_stages(circuits, eta, cutoffs, target, 'Scheme 2')


def pattern_probability(ops: Sequence[CircuitOp], eta: float,
                        cutoffs: CircuitCutoffs = CircuitCutoffs()) -> float:
    """Probability of one herald pattern for a single stage run from vacuum"""
    start = StateEnsemble.from_pure(vacuum((cutoffs.signal, cutoffs.signal)))
    _, _, probability = run_circuit(ops, start, SIGNAL_MODES, cutoffs, eta)
    return probability


def all_patterns(modes: Sequence[str]) -> List[Dict[str, Outcome]]:
    return [dict(zip(modes, combo))
            for combo in itertools.product((Outcome.CLICK, Outcome.NO_CLICK), repeat=len(modes))]


def _reflectivity(T: float) -> float:
    return math.sqrt(max(0.0, 1.0 - T * T))


def perturbative_scheme1(stage: Scheme1StageParams, state: Optional[PureState] = None,
                         cutoff: int = config.DEFAULT_SIGNAL_CUTOFF) -> PureState:
    """
    First-order heralded output with ideal detectors: the coherent operation
    with t ~ (R2/T2) s t_n and r ~ (R1/T1) s r_n (the other branch swaps
    t_n -> -r_n, r_n -> t_n). Unnormalized.
    """
    state = state if state is not None else vacuum((cutoff, cutoff))
    t_n, r_n = stage.t_n, _reflectivity(stage.t_n)
    if stage.branch == PD2_CLICK:
        t_n, r_n = -r_n, t_n
    t_eff = stage.s_tap * _reflectivity(stage.T2) / stage.T2 * t_n
    r_eff = stage.s_tap * _reflectivity(stage.T1) / stage.T1 * r_n
    return apply_On_linear(state, t_eff, r_eff, stage.xi)


def perturbative_scheme2(stage: Scheme2StageParams, state: Optional[PureState] = None,
                         cutoff: int = config.DEFAULT_SIGNAL_CUTOFF) -> PureState:
    """
    First-order (t'_odd b + r'_odd a^dag) then (t'_even a + r'_even b^dag).
    The phase shifters multiply t'_odd and t'_even. Unnormalized.
    """
    state = state if state is not None else vacuum((cutoff, cutoff))
    t_odd, r_odd = stage.t_odd, _reflectivity(stage.t_odd)
    if stage.branch_first == PD2:
        t_odd, r_odd = -r_odd, t_odd
    t_even, r_even = stage.t_even, _reflectivity(stage.t_even)
    if stage.branch_second == PD4:
        t_even, r_even = -r_even, t_even
    t1 = -_reflectivity(stage.T1) / stage.T1 * t_odd * np.exp(1j * stage.phase_odd)
    r1 = -stage.s1 * r_odd
    t2 = -_reflectivity(stage.T2) / stage.T2 * r_even * np.exp(1j * stage.phase_even)
    r2 = -stage.s2 * t_even
    return apply_Oprime_linear(state, t1, r1, t2, r2)


def _real_pair(p: CoherentOpParams) -> Tuple[float, float]:
    if abs(complex(p.t).imag) > 1e-12 or abs(complex(p.r).imag) > 1e-12:
        raise CoefficientError(f"Circuit maps need real t and r, got {p.t}, {p.r}")
    return complex(p.t).real, complex(p.r).real


def _polar_pair(p: CoherentOpParams) -> Tuple[float, float, float]:
    """|t|, |r| and the relative phase arg(t) - arg(r), wrapped to (-pi, pi]"""
    t, r = complex(p.t), complex(p.r)
    if abs(t) < 1e-15 or abs(r) < 1e-15:
        return abs(t), abs(r), 0.0
    phase = float(np.angle(t / r))
    return abs(t), abs(r), phase


def _transmissivity(t_raw: float, r_raw: float) -> float:
    """Real BS transmissivity with r >= 0 for a pair given up to a common factor"""
    norm = math.hypot(t_raw, r_raw)
    if norm == 0:
        raise CoefficientError("Cannot map t = r = 0 to a beam splitter")
    if r_raw < 0:
        t_raw, r_raw = -t_raw, -r_raw
    return max(-1.0, min(1.0, t_raw / norm))


def ideal_to_scheme1_stage(p: CoherentOpParams, s_tap: float, T1: float, T2: float,
                           branch: str = PD1_CLICK) -> Scheme1StageParams:
    """BS3 transmissivity whose first-order heralded action matches the ideal operator"""
    t, r = _real_pair(p)
    k1 = T1 / _reflectivity(T1)
    k2 = T2 / _reflectivity(T2)
    if branch == PD1_CLICK:
        t_n = _transmissivity(t * k2, r * k1)
    else:
        t_n = _transmissivity(r * k1, -t * k2)
    return Scheme1StageParams(xi=p.squeeze or SqueezerParams(0.0), s_tap=s_tap, T1=T1, T2=T2,
                              t_n=t_n, branch=branch)


def ideal_to_scheme2_stage(p_odd: CoherentOpParams, p_even: CoherentOpParams, s1: float, s2: float,
                           T1: float, T2: float, branch_first: str = PD1,
                           branch_second: str = PD3) -> Scheme2StageParams:
    """
    BS3/BS4 transmissivities and phase shifts whose first-order heralded
    action matches the odd and even operators. Complex t and r are split into
    magnitudes carried by the beam splitters and the relative phase arg(t / r)
    carried by the phase shifter.
    """
    t, r, phase_odd = _polar_pair(p_odd)
    k1 = T1 / _reflectivity(T1)
    if branch_first == PD1:
        t_odd = _transmissivity(t * k1, r / s1)
    else:
        t_odd = _transmissivity(-r / s1, t * k1)
    t, r, phase_even = _polar_pair(p_even)
    k2 = T2 / _reflectivity(T2)
    if branch_second == PD3:
        t_even = _transmissivity(r / s2, t * k2)
    else:
        t_even = _transmissivity(t * k2, -r / s2)
    return Scheme2StageParams(s1=s1, s2=s2, T1=T1, T2=T2, t_odd=t_odd, t_even=t_even,
                              branch_first=branch_first, branch_second=branch_second,
                              phase_odd=phase_odd, phase_even=phase_even)


@dataclass
class FitResult:
    scheme: int
    stages: list
    residual: float
    coefficients: Optional[PnesCoefficients] = None


def _real_target(target: PnesCoefficients) -> np.ndarray:
    canonical = canonical_phase(target).coeffs
    if np.max(np.abs(canonical.imag)) > 1e-12:
        raise CoefficientError("Circuit fits support real coefficients only")
    return canonical.real


def n1_scheme1_params(target: PnesCoefficients, s: float) -> CoherentOpParams:
    """
    Closed-form single operation with phi = pi producing C_0|00> + C_1|11>:
    t/r = tau (1 - c tau) / (c - tau) with tau = tanh s and c = C_1 / C_0.
    """
    c0, c1 = _real_target(target)
    squeeze = SqueezerParams(s, math.pi)
    tau = math.tanh(s)
    if c0 == 0:
        # t + r tanh^2 s = 0
        t, r = -tau * tau, 1.0
    else:
        c = c1 / c0
        if abs(c - tau) < 1e-14:
            t, r = 1.0, 0.0
        else:
            t, r = tau * (1 - c * tau) / (c - tau), 1.0
    norm = math.hypot(t, r)
    return CoherentOpParams(t / norm, r / norm, squeeze)


def _unit_pair(t: complex, r: complex) -> CoherentOpParams:
    norm = math.hypot(abs(t), abs(r))
    return CoherentOpParams(complex(t) / norm, complex(r) / norm)


def n2_scheme2_params(target: PnesCoefficients) -> List[Tuple[CoherentOpParams, CoherentOpParams]]:
    """
    Exact two-stage odd/even parameters for C_0|00> + C_1|11> + C_2|22>, C_0 != 0.

    The first stage prepares (|00> + |11>)/sqrt2. With alpha = r_4/t_4 and
    beta = 2 r_3/(t_3 + r_3) the second stage gives C_1/C_0 = alpha + beta and
    C_2/C_0 = alpha beta, so alpha and beta are the roots of
    z^2 - (C_1/C_0) z + C_2/C_0. Complex roots need complex t and r.
    """
    c0, c1, c2 = _real_target(target)
    if c0 == 0:
        raise CoefficientError("Closed-form scheme 2 parameters need C_0 != 0")
    alpha, beta = np.roots([1.0, -c1 / c0, c2 / c0]) if c2 != 0 else (0.0, c1 / c0)
    first = (CoherentOpParams(0.0, 1.0), _unit_pair(1.0, 1.0))
    second = (_unit_pair(2.0 - beta, beta), _unit_pair(1.0, alpha))
    return [first, second]


def _overlap_fidelity(state: PureState, target: np.ndarray) -> float:
    n = np.arange(len(target))
    diagonal = state.amplitudes[n, n]
    return float(abs(np.vdot(target, diagonal)) ** 2 / state.norm_squared)


def fit_params_to_target(target: PnesCoefficients, scheme: int, s: float = config.FEASIBILITY_COUPLING,
                         cfg: Optional[OptimizerConfig] = None) -> FitResult:
    """
    Ideal-operator parameters whose action on |00> best matches the target.
    Scheme 1 fits one real (t, r, phi) per operation at squeezing s. Scheme 2
    solves N=2 in closed form and otherwise fits a complex (t, r) pair per
    odd/even factor.
    """
    N = target.N
    if N < 1 or N > 3:
        raise CoefficientError(f"Fits support 1 <= N <= 3, got N={N}")
    wanted = _real_target(target)
    cutoff = N

    if scheme == 1 and N == 1:
        stages = [n1_scheme1_params(target, s)]
        state = ideal_On_sequence(stages, cutoff)
    elif scheme == 2 and N == 1:
        stages = [(CoherentOpParams(0.0, 1.0), CoherentOpParams(wanted[0], wanted[1]))]
        state = ideal_Oprime_sequence(stages, cutoff)
    elif scheme == 1:
        bounds = tuple((-math.pi, math.pi) for _ in range(N)) + tuple((0.0, 2 * math.pi) for _ in range(N))

        def build(x):
            return [CoherentOpParams(math.cos(x[k]), math.sin(x[k]), SqueezerParams(s, x[N + k]))
                    for k in range(N)]
        stages, state = _fit(build, ideal_On_sequence, wanted, cutoff, bounds, cfg)
    elif scheme == 2 and N == 2 and wanted[0] != 0:
        stages = n2_scheme2_params(target)
        state = ideal_Oprime_sequence(stages, cutoff)
    elif scheme == 2:
        # each factor is (cos x, e^{i phi} sin x)
        bounds = tuple((-math.pi, math.pi) for _ in range(4 * N))

        def factor(x, phi):
            return CoherentOpParams(math.cos(x), np.exp(1j * phi) * math.sin(x))

        def build(x):
            return [(factor(x[4 * k], x[4 * k + 1]), factor(x[4 * k + 2], x[4 * k + 3])) for k in range(N)]
        stages, state = _fit(build, ideal_Oprime_sequence, wanted, cutoff, bounds, cfg)
    else:
        raise ValueError(f"Unknown scheme {scheme}")

    residual = 1.0 - _overlap_fidelity(state, wanted)
    if residual > 1e-6:
        logger.warning(f"Scheme {scheme} fit for {np.round(wanted, 4)} left residual {residual:.3e}")
    n = np.arange(N + 1)
    coefficients = canonical_phase(normalize_coeffs(state.amplitudes[n, n]))
    return FitResult(scheme=scheme, stages=stages, residual=max(0.0, residual), coefficients=coefficients)


def _fit(build, sequence, wanted: np.ndarray, cutoff: int, bounds, cfg: Optional[OptimizerConfig]):
    cfg = cfg or OptimizerConfig(bounds=bounds)

    def objective(x):
        try:
            state = sequence(build(x), cutoff)
        except (ValueError, ZeroDivisionError):
            return 1.0
        return 1.0 - _overlap_fidelity(state, wanted)

    result = minimize(objective, cfg)
    stages = build(result.x)
    return stages, sequence(stages, cutoff)


def scheme1_stages_for(target: PnesCoefficients, regime: Regime = Regime()
                       ) -> Tuple[List[Scheme1StageParams], FitResult]:
    fit = fit_params_to_target(target, 1, regime.coupling)
    branch = PD2_CLICK if regime.alternate_branch else PD1_CLICK
    stages = [ideal_to_scheme1_stage(p, regime.coupling, regime.T, regime.T, branch) for p in fit.stages]
    return stages, fit


def scheme2_stages_for(target: PnesCoefficients, regime: Regime = Regime()
                       ) -> Tuple[List[Scheme2StageParams], FitResult]:
    fit = fit_params_to_target(target, 2, regime.coupling)
    first, second = (PD2, PD4) if regime.alternate_branch else (PD1, PD3)
    stages = [ideal_to_scheme2_stage(p_odd, p_even, regime.coupling, regime.coupling,
                                     regime.T, regime.T, first, second) for p_odd, p_even in fit.stages]
    return stages, fit


def run_for_target(scheme: int, target: PnesCoefficients, regime: Regime = Regime(),
                   cutoffs: CircuitCutoffs = CircuitCutoffs(), stages=None) -> SchemeResult:
    if scheme == 1:
        stages = stages or scheme1_stages_for(target, regime)[0]
        return scheme1_run(stages, regime.eta, cutoffs, regime.detector_model, target)
    if scheme == 2:
        stages = stages or scheme2_stages_for(target, regime)[0]
        return scheme2_run(stages, regime.eta, cutoffs, regime.detector_model, target)
    raise ValueError(f"Unknown scheme {scheme}")


def targets_n1_grid() -> List[PnesCoefficients]:
    """C_0|00> + C_1|11> for every |C_0|^2 on the declared grid"""
    return [normalize_coeffs([math.sqrt(p0), math.sqrt(1.0 - p0)]) for p0 in config.N1_GRID]


def targets_n2_grid() -> List[PnesCoefficients]:
    """(|C_1|^2, |C_2|^2) on the declared grid, keeping |C_0|^2 > 0"""
    targets = []
    for p1 in config.N2_GRID:
        for p2 in config.N2_GRID:
            p0 = 1.0 - p1 - p2
            if p0 > 1e-9:
                targets.append(normalize_coeffs([math.sqrt(p0), math.sqrt(p1), math.sqrt(p2)]))
    return targets


def target_key(target: PnesCoefficients) -> Tuple[float, ...]:
    return tuple(round(abs(c) ** 2, 10) for c in target.coeffs)


def _grid_row(scheme: int, target: PnesCoefficients, regime: Regime, cutoffs: CircuitCutoffs,
              stages=None, extra: Optional[dict] = None) -> dict:
    row = {'scheme': scheme}
    for k, weight in enumerate(target_key(target)):
        row[f'c{k}_sq'] = weight
    row.update(extra or {})
    try:
        result = run_for_target(scheme, target, regime, cutoffs, stages)
        row.update({'fidelity': result.fidelity_vs_target,
                    'success_probability': result.success_probability,
                    'truncation_loss': result.truncation_loss,
                    'status': 'success', 'error': None})
    except (HeraldError, TruncationError, CoefficientError, ValueError) as e:
        logger.error(f"Scheme {scheme} at {target_key(target)} {extra or ''}: {e}")
        row.update({'fidelity': None, 'success_probability': None, 'truncation_loss': None,
                    'status': 'error', 'error': str(e)})
    return row


def _parallel_rows(jobs: List[Tuple], threads: int, label: str) -> List[dict]:
    rows = []
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        futures = [executor.submit(_grid_row, *job) for job in jobs]
        for completed, future in enumerate(as_completed(futures), start=1):
            rows.append(future.result())
            if completed % 10 == 0 or completed == len(futures):
                logger.info(f"{label}: {completed}/{len(futures)} points done")
    return rows


def scheme_fidelity_grid(scheme: int, targets: Sequence[PnesCoefficients], regime: Regime = Regime(),
                         cutoffs: CircuitCutoffs = CircuitCutoffs(), threads: int = 1) -> List[dict]:
    """Fidelity and success probability per target, sorted by target weights"""
    jobs = [(scheme, target, regime, cutoffs) for target in targets]
    rows = _parallel_rows(jobs, threads, f"Scheme {scheme} grid")
    return sorted(rows, key=lambda row: tuple(v for k, v in row.items() if k.endswith('_sq')))


BS_NAMES = {1: ('t_n',), 2: ('t_odd', 't_even')}


def bs_error_sweep(scheme: int, targets: Sequence[PnesCoefficients], delta_t: Sequence[float],
                   regime: Regime = Regime(), cutoffs: CircuitCutoffs = CircuitCutoffs(),
                   threads: int = 1) -> List[dict]:
    """
    Fidelity with each tunable beam splitter's transmissivity offset by every
    delta in delta_t. Rows carry which_bs and delta_t next to the target weights.
    """
    jobs = []
    for target in targets:
        if scheme == 1:
            base, _ = scheme1_stages_for(target, regime)
        elif scheme == 2:
            base, _ = scheme2_stages_for(target, regime)
        else:
            raise ValueError(f"Unknown scheme {scheme}")
        for name in BS_NAMES[scheme]:
            for delta in delta_t:
                perturbed = []
                for stage in base:
                    value = getattr(stage, name) + delta
                    if not -1.0 <= value <= 1.0:
                        raise ValueError(f"{name}={value} leaves [-1, 1] for delta {delta}")
                    perturbed.append(dataclasses.replace(stage, **{name: value}))
                jobs.append((scheme, target, regime, cutoffs, perturbed,
                             {'which_bs': name, 'delta_t': delta}))
    rows = _parallel_rows(jobs, threads, f"Scheme {scheme} beam-splitter sweep")
    return sorted(rows, key=lambda row: (row['which_bs'], row['delta_t'],
                                         tuple(v for k, v in row.items() if k.endswith('_sq'))))
