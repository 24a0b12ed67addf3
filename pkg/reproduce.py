"""
Figure data runners with built-in acceptance checks.

Each runner computes the table behind one figure, writes it as CSV with the
checks and their tolerances in '#' header lines, and returns a FigureResult.
check_figure raises ToleranceFailure when any check fails.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

import config
from measures import entanglement_entropy, epr_correlation, epr_tmss, minimize_epr_pnes
from optimizer import OptimizerConfig, sphere_bounds
from pnes_states import equal_pnes, make_pnes, make_tmss
from protocols import (BELL_LOCAL_BOUND, FULL_COMPLEX, REAL_LINE, bell_optimal_tmss, bell_optimizer_config,
                       optimize_pnes_for_bell, optimize_pnes_for_teleportation, teleport_fidelity_coherent,
                       teleport_fidelity_tmss)
from records import emit_records
from schemes import (CircuitCutoffs, Regime, bs_error_sweep, scheme_fidelity_grid, targets_n1_grid,
                     targets_n2_grid)

logger = logging.getLogger(__name__)

FIGURES = ('1a', '1b', '2a', '2b', '5', '6a', '6b', '7')
PNES_CURVES = (1, 2, 10)
TELEPORT_CURVES = (1, 2, 3)
BELL_CURVES = (1, 2)
BELL_TARGET = 2.3188
TMSS_NUMERIC_MAX_S = 1.0


class ToleranceFailure(RuntimeError):
    """A reproduced value fell outside its acceptance tolerance"""


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    low: float
    high: float

    @property
    def passed(self) -> bool:
        return bool(self.low <= self.value <= self.high)

    def describe(self) -> str:
        status = 'PASS' if self.passed else 'FAIL'
        return f"{self.name}: {self.value:.12g} within [{self.low:.12g}, {self.high:.12g}] {status}"


def near(name: str, value: float, expected: float, tolerance: float) -> Check:
    return Check(name, float(value), expected - tolerance, expected + tolerance)


def at_least(name: str, value: float, floor: float) -> Check:
    return Check(name, float(value), floor, math.inf)


def at_most(name: str, value: float, ceiling: float) -> Check:
    return Check(name, float(value), -math.inf, ceiling)


def holds(name: str, condition: bool) -> Check:
    return Check(name, 1.0 if condition else 0.0, 1.0, 1.0)


@dataclass
class FigureResult:
    figure: str
    path: str
    rows: List[dict]
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]


@dataclass(frozen=True)
class RunSettings:
    out_dir: str = config.OUTPUT_DIR
    eta: float = config.FEASIBILITY_ETA
    cutoffs: CircuitCutoffs = CircuitCutoffs()
    threads: int = 1

    @property
    def regime(self) -> Regime:
        return Regime(eta=self.eta)


def _write(figure: str, rows: List[dict], checks: List[Check], settings: RunSettings,
           columns: Optional[Sequence[str]] = None) -> FigureResult:
    path = os.path.join(settings.out_dir, f"figure_{figure}.csv")
    header = [f"figure {figure}"] + [f"tolerance {c.describe()}" for c in checks]
    emit_records(rows, path, columns=columns, header_lines=header)
    return FigureResult(figure, path, rows, checks)


def figure_1a(settings: RunSettings) -> FigureResult:
    """Entanglement entropy: TMSS against squeezing, equal-coefficient PNES as constants"""
    pnes = {N: entanglement_entropy(make_pnes(equal_pnes(N), N)) for N in PNES_CURVES}
    rows = []
    for s in config.SQUEEZING_GRID:
        row = {'s_or_N': s, 'entropy_tmss': entanglement_entropy(make_tmss(s))}
        row.update({f'entropy_pnes_N{N}': pnes[N] for N in PNES_CURVES})
        rows.append(row)

    checks = [near(f'entropy_pnes_N{N}', pnes[N], expected, 1e-3)
              for N, expected in zip(PNES_CURVES, (1.0, 1.585, 3.459))]
    checks += [near(f'entropy_tmss_s{s}', entanglement_entropy(make_tmss(s)), expected, 5e-3)
               for s, expected in ((0.5185, 1.0), (0.7335, 1.585), (1.391, 3.459))]
    return _write('1a', rows, checks, settings)


def figure_1b(settings: RunSettings) -> FigureResult:
    """EPR correlation: TMSS against squeezing, coefficient-minimized PNES as constants"""
    pnes = {N: minimize_epr_pnes(N)[0] for N in PNES_CURVES}
    rows = []
    for s in config.SQUEEZING_GRID:
        row = {'s_or_N': s, 'epr_tmss': epr_correlation(make_tmss(s))}
        row.update({f'epr_pnes_N{N}': pnes[N] for N in PNES_CURVES})
        rows.append(row)

    checks = [near(f'epr_pnes_N{N}', pnes[N], expected, 1e-3)
              for N, expected in zip(PNES_CURVES, (1.172, 0.8315, 0.2516))]
    checks.append(near('epr_pnes_N1_closed_form', pnes[1], 2 * (2 - math.sqrt(2)), 1e-9))
    checks += [near(f'epr_tmss_s{s}', epr_correlation(make_tmss(s)), expected, 1e-3)
               for s, expected in ((0.2674, 1.172), (0.4388, 0.8315), (1.037, 0.2516))]
    checks.append(at_most('epr_tmss_vs_closed_form',
                          max(abs(r['epr_tmss'] - epr_tmss(r['s_or_N'])) for r in rows), 1e-6))
    return _write('1b', rows, checks, settings)


def figure_2a(settings: RunSettings) -> FigureResult:
    """Teleportation fidelity: TMSS against squeezing, optimized PNES as constants"""
    optima = {N: optimize_pnes_for_teleportation(N, _sphere_config(N, settings)) for N in TELEPORT_CURVES}
    rows = []
    for s in config.SQUEEZING_GRID:
        numeric = teleport_fidelity_coherent(make_tmss(s)) if s <= TMSS_NUMERIC_MAX_S else None
        row = {'s_or_N': s, 'fidelity_tmss': teleport_fidelity_tmss(s), 'fidelity_tmss_numeric': numeric}
        row.update({f'fidelity_pnes_N{N}': optima[N].fidelity for N in TELEPORT_CURVES})
        rows.append(row)

    checks = [near('fidelity_pnes_N1', optima[1].fidelity, (3 + math.sqrt(5)) / 8, 1e-6),
              near('fidelity_pnes_N2', optima[2].fidelity, 0.7334, 1e-3)]
    for k, expected in enumerate((0.765, 0.535, 0.359)):
        checks.append(near(f'coefficient_N2_C{k}', optima[2].resource_coeffs.magnitudes()[k], expected, 1e-2))
    for N, expected in zip(TELEPORT_CURVES, (0.320, 0.506, 0.638)):
        checks.append(near(f'equivalent_s_N{N}', optima[N].equivalent_tmss_s, expected, 5e-3))
    deviation = max(abs(r['fidelity_tmss_numeric'] - r['fidelity_tmss'])
                    for r in rows if r['fidelity_tmss_numeric'] is not None)
    checks.append(at_most('fidelity_tmss_vs_closed_form', deviation, 1e-6))
    checks.append(holds('pnes_optimum_nondecreasing_in_N',
                        all(optima[a].fidelity <= optima[b].fidelity + 1e-9
                            for a, b in zip(TELEPORT_CURVES, TELEPORT_CURVES[1:]))))
    return _write('2a', rows, checks, settings)


def _sphere_config(N: int, settings: RunSettings) -> OptimizerConfig:
    return OptimizerConfig(bounds=sphere_bounds(N), threads=settings.threads)


def _bell_config(N: int, strategy: str, settings: RunSettings) -> OptimizerConfig:
    return bell_optimizer_config(strategy, sphere_bounds(N), settings.threads)


def best_pnes_bell(N: int, settings: RunSettings):
    """Real-line settings first; the full complex plane only when they miss the target"""
    value, coeffs, best = optimize_pnes_for_bell(N, REAL_LINE, _bell_config(N, REAL_LINE, settings))
    if N == 2 and value < BELL_TARGET:
        logger.info(f"Real-line Bell optimum {value:.6f} below {BELL_TARGET}; trying full complex settings")
        candidate = optimize_pnes_for_bell(N, FULL_COMPLEX, _bell_config(N, FULL_COMPLEX, settings))
        if candidate[0] > value:
            value, coeffs, best = candidate
    return value, coeffs, best


def figure_2b(settings: RunSettings) -> FigureResult:
    """Bell-Wigner parameter: optimized TMSS against squeezing, optimized PNES as constants"""
    pnes = {N: best_pnes_bell(N, settings) for N in BELL_CURVES}
    rows = []
    for s in config.BELL_SQUEEZING_GRID:
        value, _ = bell_optimal_tmss(s)
        row = {'s_or_N': s, 'bell_tmss': value}
        row.update({f'bell_pnes_N{N}': pnes[N][0] for N in BELL_CURVES})
        rows.append(row)

    checks = [at_least('bell_pnes_N2', pnes[2][0], BELL_TARGET)]
    for k, expected in enumerate((0.589, 0.700, 0.404)):
        checks.append(near(f'bell_coefficient_N2_C{k}', pnes[2][1].magnitudes()[k], expected, 2e-2))
    tmss_one = next(r['bell_tmss'] for r in rows if abs(r['s_or_N'] - 1.0) < 1e-12)
    checks.append(Check('bell_tmss_s1.0', tmss_one, BELL_LOCAL_BOUND, 2.33))
    checks.append(at_most('bell_tmss_max', max(r['bell_tmss'] for r in rows), 2 * math.sqrt(2) + 1e-9))
    return _write('2b', rows, checks, settings)


def _by_target(rows: List[dict]) -> Dict[tuple, dict]:
    return {tuple(v for k, v in row.items() if k.endswith('_sq')): row for row in rows}


def _increasing(values: Sequence[float]) -> bool:
    return all(b >= a for a, b in zip(values, values[1:]))


def figure_5(settings: RunSettings) -> FigureResult:
    """N=1 output fidelity and success probability of both schemes over |C0|^2"""
    targets = targets_n1_grid()
    first = _by_target(scheme_fidelity_grid(1, targets, settings.regime, settings.cutoffs, settings.threads))
    second = _by_target(scheme_fidelity_grid(2, targets, settings.regime, settings.cutoffs, settings.threads))
    rows = []
    for key in sorted(first):
        rows.append({'c0_sq': key[0],
                     'fidelity_scheme1': first[key]['fidelity'],
                     'success_scheme1': first[key]['success_probability'],
                     'fidelity_scheme2': second[key]['fidelity'],
                     'success_scheme2': second[key]['success_probability'],
                     'status': 'success' if first[key]['status'] == second[key]['status'] == 'success'
                     else 'error'})

    checks = [holds('all_points_succeeded', all(r['status'] == 'success' for r in rows))]
    good = [r for r in rows if r['status'] == 'success']
    if good:
        checks.append(at_least('min_fidelity_scheme1', min(r['fidelity_scheme1'] for r in good), 0.996))
        checks.append(at_least('min_fidelity_scheme2', min(r['fidelity_scheme2'] for r in good), 0.993))
        success1 = [r['success_scheme1'] for r in good]
        success2 = [r['success_scheme2'] for r in good]
        checks.append(Check('success_scheme1_min', min(success1), 2.4e-6 / 3, 3e-4))
        checks.append(Check('success_scheme1_max', max(success1), 2.4e-6 / 3, 3e-4))
        checks.append(holds('success_scheme1_increasing_in_c0', _increasing(success1)))
        checks.append(Check('success_scheme2_geometric_mean', float(np.exp(np.mean(np.log(success2)))),
                            1e-4 / 3, 3e-4))
    return _write('5', rows, checks, settings)


def _n2_figure(figure: str, scheme: int, floor: float, settings: RunSettings) -> FigureResult:
    rows = scheme_fidelity_grid(scheme, targets_n2_grid(), settings.regime, settings.cutoffs, settings.threads)
    columns = ['c0_sq', 'c1_sq', 'c2_sq', 'fidelity', 'success_probability', 'truncation_loss', 'status']
    checks = [holds('all_points_succeeded', all(r['status'] == 'success' for r in rows))]
    good = [r for r in rows if r['status'] == 'success']
    if good:
        checks.append(at_least(f'min_fidelity_scheme{scheme}', min(r['fidelity'] for r in good), floor))
    return _write(figure, rows, checks, settings, columns)


def figure_6a(settings: RunSettings) -> FigureResult:
    """N=2 output fidelity of scheme 1 over the (|C1|^2, |C2|^2) grid"""
    return _n2_figure('6a', 1, 0.941, settings)


def figure_6b(settings: RunSettings) -> FigureResult:
    """N=2 output fidelity of scheme 2 over the (|C1|^2, |C2|^2) grid"""
    return _n2_figure('6b', 2, 0.949, settings)


def _degradation(rows: List[dict]) -> Dict[float, float]:
    """Per |C0|^2: unperturbed fidelity minus the worst perturbed one"""
    base: Dict[float, float] = {}
    worst: Dict[float, float] = {}
    for row in rows:
        if row['status'] != 'success':
            continue
        key = row['c0_sq']
        if row['delta_t'] == 0.0:
            base[key] = row['fidelity']
        worst[key] = min(worst.get(key, math.inf), row['fidelity'])
    return {key: base[key] - worst[key] for key in base}


def figure_7(settings: RunSettings) -> FigureResult:
    """N=1 fidelity with +-0.01 errors on the tunable beam-splitter transmissivities"""
    targets = targets_n1_grid()
    rows = []
    for scheme in (1, 2):
        rows += bs_error_sweep(scheme, targets, config.BS_ERRORS, settings.regime, settings.cutoffs,
                               settings.threads)
    columns = ['scheme', 'which_bs', 'delta_t', 'c0_sq', 'fidelity', 'success_probability', 'status']

    checks = [holds('all_points_succeeded', all(r['status'] == 'success' for r in rows))]
    first = [r for r in rows if r['scheme'] == 1 and r['status'] == 'success']
    if first:
        checks.append(at_least('min_fidelity_scheme1_perturbed', min(r['fidelity'] for r in first), 0.98))
    loss1 = _degradation([r for r in rows if r['scheme'] == 1])
    loss2 = _degradation([r for r in rows if r['scheme'] == 2])
    shared = sorted(set(loss1) & set(loss2))
    checks.append(holds('scheme2_degrades_no_more_than_scheme1',
                        bool(shared) and all(loss2[k] <= loss1[k] + 1e-12 for k in shared)))
    return _write('7', rows, checks, settings, columns)


RUNNERS: Dict[str, Callable[[RunSettings], FigureResult]] = {
    '1a': figure_1a, '1b': figure_1b, '2a': figure_2a, '2b': figure_2b,
    '5': figure_5, '6a': figure_6a, '6b': figure_6b, '7': figure_7,
}


def reproduce_figure(figure: str, settings: RunSettings = RunSettings()) -> FigureResult:
    if figure not in RUNNERS:
        raise ValueError(f"Unknown figure {figure}; expected one of {FIGURES}")
    logger.info(f"Reproducing figure {figure}")
    result = RUNNERS[figure](settings)
    for check in result.checks:
        log = logger.info if check.passed else logger.error
        log(f"Figure {figure} {check.describe()}")
    return result


def check_figure(result: FigureResult):
    if not result.passed:
        names = ', '.join(c.name for c in result.failures)
        raise ToleranceFailure(f"Figure {result.figure} failed checks: {names}")
