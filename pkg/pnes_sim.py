#!/usr/bin/env python3
"""
PNES simulator command line: entanglement measures, teleportation and Bell
benchmarks, heralded generation schemes, sweeps and figure reproduction.
"""

import argparse
import json
import logging
import os
import sys
from datetime import datetime
from typing import List, Optional

import numpy as np

import config
from fock_core import FockError, PureState, normalize, vacuum
from measures import PhasePoint, entanglement_entropy, epr_correlation, wigner
from optics_ops import HeraldError
from pnes_states import (coefficients_of, equal_pnes, ideal_On_sequence, ideal_Oprime_sequence,
                         make_pnes, make_tmss, normalize_coeffs)
from protocols import (FULL_COMPLEX, REAL_LINE, equivalent_tmss_squeezing, optimize_bell,
                       optimize_pnes_for_bell, optimize_pnes_for_teleportation,
                       teleport_fidelity_coherent)
from records import FORMATS, emit_records
from reproduce import FIGURES, RunSettings, ToleranceFailure, check_figure, reproduce_figure
from scenario import ConfigError, ResourceSpec, ScenarioConfig, load_scenario
from schemes import (PD1, PD2, PD1_CLICK, PD2_CLICK, PD3, PD4, CircuitCutoffs, bs_error_sweep,
                     ideal_to_scheme1_stage, ideal_to_scheme2_stage, run_for_target, scheme_fidelity_grid,
                     targets_n1_grid, targets_n2_grid)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_TOLERANCE = 3


def setup_logging(task_id=None):
    """Configure logging for the application"""
    os.makedirs(config.LOG_DIR, exist_ok=True)

    # Separate log files for Slurm array tasks
    if task_id:
        log_file = os.path.join(config.LOG_DIR, f'pnes_task_{task_id}.log')
        error_file = os.path.join(config.LOG_DIR, f'errors_task_{task_id}.log')
    else:
        log_file = config.MAIN_LOG_FILE
        error_file = config.ERROR_LOG_FILE

    logging.basicConfig(
        level=getattr(logging, config.LOG_LEVEL),
        format=config.LOG_FORMAT,
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler(sys.stdout)
        ]
    )

    error_handler = logging.FileHandler(error_file)
    error_handler.setLevel(logging.ERROR)
    error_handler.setFormatter(logging.Formatter(config.LOG_FORMAT))
    logging.getLogger().addHandler(error_handler)

    return logging.getLogger(__name__)


def default_threads() -> int:
    value = os.environ.get(config.THREADS_ENV)
    if not value:
        return config.DEFAULT_THREADS
    try:
        return max(1, int(value))
    except ValueError:
        raise ConfigError(f"{config.THREADS_ENV} must be an integer, got {value!r}")


def build_resource(spec: ResourceSpec) -> PureState:
    if spec.kind == 'pnes':
        coeffs = normalize_coeffs(spec.coefficients)
        return make_pnes(coeffs, max(coeffs.N, 1))
    if spec.kind == 'tmss':
        return make_tmss(spec.s)
    if spec.kind == 'equal':
        return make_pnes(equal_pnes(spec.N), spec.N)
    return vacuum((1, 1))


def resource_from_args(args) -> ResourceSpec:
    if args.config:
        scenario = load_scenario(args.config)
        if scenario.resource is None:
            raise ConfigError(f"{args.config} does not define a resource")
        return scenario.resource
    if args.resource is None:
        raise ConfigError("Give --resource or --config")
    if args.resource == 'pnes' and not args.coeffs:
        raise ConfigError("--resource pnes needs --coeffs")
    if args.resource == 'equal' and (args.N is None or args.N < 1):
        raise ConfigError("--resource equal needs --N >= 1")
    if args.s is not None and args.s < 0:
        raise ConfigError(f"--s must be >= 0, got {args.s}")
    return ResourceSpec(kind=args.resource, coefficients=tuple(args.coeffs or ()),
                        s=args.s or 0.0, N=args.N or 0)


def _output_path(args, default_name: str) -> str:
    if args.out:
        return args.out
    return os.path.join(config.OUTPUT_DIR, default_name)


def _extension(fmt: str) -> str:
    return 'csv' if fmt == 'csv' else 'jsonl'


def cmd_measures(args, logger) -> dict:
    spec = resource_from_args(args)
    state = build_resource(spec)
    record = {'resource': spec.kind,
              'entropy': entanglement_entropy(state),
              'epr': epr_correlation(state),
              'wigner_origin': wigner(state, PhasePoint(0, 0))}
    logger.info(f"Entropy {record['entropy']:.6f} bits, EPR {record['epr']:.6f}, "
                f"W(0,0) {record['wigner_origin']:.6f}")
    print(f"entropy={record['entropy']:.6g} epr={record['epr']:.6g} wigner_origin={record['wigner_origin']:.6g}")
    if args.out:
        emit_records([record], args.out, args.format)
    return record


def cmd_teleport(args, logger) -> dict:
    if args.optimize is not None:
        result = optimize_pnes_for_teleportation(args.optimize)
        record = {'resource': f'optimal_pnes_N{args.optimize}', 'fidelity': result.fidelity,
                  'equivalent_s': result.equivalent_tmss_s, 'equivalent_db': result.equivalent_db,
                  'coefficients': ' '.join(f'{c:.6g}' for c in result.resource_coeffs.magnitudes())}
    else:
        spec = resource_from_args(args)
        fidelity = teleport_fidelity_coherent(build_resource(spec))
        record = {'resource': spec.kind, 'fidelity': fidelity,
                  'equivalent_s': equivalent_tmss_squeezing(fidelity)}
    logger.info(f"Teleportation fidelity {record['fidelity']:.6f}")
    print(f"{record['fidelity']:.4f}")
    if args.out:
        emit_records([record], args.out, args.format)
    return record


def cmd_bell(args, logger) -> dict:
    if args.optimize is not None:
        value, coeffs, settings = optimize_pnes_for_bell(args.optimize, args.strategy)
        record = {'resource': f'optimal_pnes_N{args.optimize}', 'bell': value,
                  'coefficients': ' '.join(f'{c:.6g}' for c in coeffs.magnitudes())}
    else:
        spec = resource_from_args(args)
        value, settings = optimize_bell(build_resource(spec), args.strategy)
        record = {'resource': spec.kind, 'bell': value}
    record['settings'] = json.dumps(settings.as_dict(), sort_keys=True)
    logger.info(f"Bell-Wigner parameter {value:.6f} ({args.strategy})")
    print(f"{value:.5f}")
    if args.out:
        emit_records([record], args.out, args.format)
    return record


def _scheme_stages(scenario: ScenarioConfig):
    """Circuit stages and the target they aim at"""
    regime = scenario.regime
    target = normalize_coeffs(scenario.target) if scenario.target else None
    if scenario.stages:
        return list(scenario.stages), target
    if not scenario.ideal_stages:
        return None, target
    n_ops = len(scenario.ideal_stages)
    if scenario.scheme == 1:
        branch = PD2_CLICK if regime.alternate_branch else PD1_CLICK
        stages = [ideal_to_scheme1_stage(p, regime.coupling, regime.T, regime.T, branch)
                  for p in scenario.ideal_stages]
        ideal = ideal_On_sequence(scenario.ideal_stages, n_ops)
    else:
        first, second = (PD2, PD4) if regime.alternate_branch else (PD1, PD3)
        stages = [ideal_to_scheme2_stage(odd, even, regime.coupling, regime.coupling, regime.T, regime.T,
                                         first, second) for odd, even in scenario.ideal_stages]
        ideal = ideal_Oprime_sequence(scenario.ideal_stages, n_ops)
    return stages, target or coefficients_of(ideal)


def cmd_scheme(args, logger) -> dict:
    scenario = _scenario_from_args(args)
    if scenario.scheme is None:
        raise ConfigError(f"Scenario '{scenario.name}' has no scheme")
    stages, target = _scheme_stages(scenario)
    if stages is None and target is None:
        raise ConfigError(f"Scenario '{scenario.name}' needs stages, ideal_stages or a target")
    result = run_for_target(scenario.scheme, target, scenario.regime, scenario.cutoffs, stages)

    record = {'name': scenario.name, 'scheme': scenario.scheme, 'eta': scenario.eta,
              'fidelity': result.fidelity_vs_target, 'success_probability': result.success_probability,
              'truncation_loss': result.truncation_loss}
    output = result.output.normalized()
    if 'entropy' in scenario.outputs:
        # defined for pure outputs only
        record['entropy'] = entanglement_entropy(normalize(output.members[0][1])) if len(output) == 1 else None
    if 'epr' in scenario.outputs:
        record['epr'] = epr_correlation(output)
    if 'teleport' in scenario.outputs:
        record['teleport'] = teleport_fidelity_coherent(output)
    if 'bell' in scenario.outputs:
        record['bell'] = optimize_bell(output, REAL_LINE)[0]

    logger.info("=" * 60)
    logger.info(f"SCHEME {scenario.scheme} RUN: {scenario.name}")
    logger.info("=" * 60)
    for key, value in record.items():
        logger.info(f"{key}: {value}")
    path = scenario.output_path or _output_path(args, f"{scenario.name}.{_extension(args.format)}")
    emit_records([record], path, args.format)
    return record


def cmd_sweep(args, logger) -> dict:
    scenario = _scenario_from_args(args)
    if scenario.scheme is None:
        raise ConfigError(f"Scenario '{scenario.name}' has no scheme to sweep")
    if scenario.grid == 'n1':
        targets = targets_n1_grid()
    elif scenario.grid == 'n2':
        targets = targets_n2_grid()
    elif scenario.target:
        targets = [normalize_coeffs(scenario.target)]
    else:
        raise ConfigError("A sweep needs a grid or a target")

    if scenario.delta_t:
        rows = bs_error_sweep(scenario.scheme, targets, scenario.delta_t, scenario.regime,
                              scenario.cutoffs, args.threads)
    else:
        rows = scheme_fidelity_grid(scenario.scheme, targets, scenario.regime, scenario.cutoffs, args.threads)
    path = scenario.output_path or _output_path(args, f"{scenario.name}_sweep.{_extension(args.format)}")
    emit_records(rows, path, args.format)
    statistics = {'points': len(rows),
                  'successful': sum(1 for r in rows if r['status'] == 'success'),
                  'failed': sum(1 for r in rows if r['status'] != 'success')}
    logger.info(f"Sweep statistics: {statistics}")
    return {'path': path, 'statistics': statistics}


def cmd_reproduce(args, logger) -> dict:
    figures = list(FIGURES) if args.figure == 'all' else [args.figure]
    settings = RunSettings(out_dir=args.out or config.OUTPUT_DIR, eta=args.eta,
                           cutoffs=_cutoffs_from_args(args), threads=args.threads)
    results = {}
    failures = []
    for figure in figures:
        result = reproduce_figure(figure, settings)
        results[figure] = {'path': result.path, 'passed': result.passed,
                           'checks': [c.describe() for c in result.checks]}
        if not result.passed:
            failures.append(result)

    logger.info("=" * 60)
    logger.info("REPRODUCTION SUMMARY")
    logger.info("=" * 60)
    for figure, entry in results.items():
        logger.info(f"Figure {figure}: {'PASS' if entry['passed'] else 'FAIL'} ({entry['path']})")
    for result in failures:
        check_figure(result)
    return results


def _cutoffs_from_args(args) -> CircuitCutoffs:
    return CircuitCutoffs(args.cutoff_signal or config.DEFAULT_SIGNAL_CUTOFF,
                          args.cutoff_ancilla or config.DEFAULT_ANCILLA_CUTOFF)


def _scenario_from_args(args) -> ScenarioConfig:
    if not args.config:
        raise ConfigError(f"'{args.command}' needs --config")
    scenario = load_scenario(args.config)
    return scenario.with_overrides(eta=args.eta, signal=args.cutoff_signal, ancilla=args.cutoff_ancilla)


COMMANDS = {
    'measures': cmd_measures,
    'teleport': cmd_teleport,
    'bell': cmd_bell,
    'scheme': cmd_scheme,
    'sweep': cmd_sweep,
    'reproduce': cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Photon-number entangled state simulator',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Commands:
  measures   - Entanglement entropy, EPR correlation and W(0,0) of a resource
  teleport   - Coherent-state teleportation fidelity of a resource
  bell       - Optimized Bell-Wigner parameter of a resource
  scheme     - Run a heralded generation scheme from a scenario file
  sweep      - Fidelity grid or beam-splitter error sweep from a scenario file
  reproduce  - Regenerate figure data with acceptance checks (exit 3 on failure)

Examples:
  # Teleportation through a TMSS
  python pnes_sim.py teleport --resource tmss --s 0.506

  # Two-stage scheme 1 run from a preset
  python pnes_sim.py scheme --config teleport_scheme1

  # Figure 5 data at detector efficiency 0.66
  python pnes_sim.py reproduce --figure 5 --eta 0.66
        """
    )
    parser.add_argument('command', choices=sorted(COMMANDS), help='Command to run')
    parser.add_argument('--config', type=str, help='Scenario JSON file or preset name')
    parser.add_argument('--figure', choices=list(FIGURES) + ['all'], default='all',
                        help='Figure to reproduce')
    parser.add_argument('--eta', type=float, default=None, help='Detector efficiency override')
    parser.add_argument('--cutoff-signal', type=int, default=None, help='Signal mode Fock cutoff')
    parser.add_argument('--cutoff-ancilla', type=int, default=None, help='Ancilla mode Fock cutoff')
    parser.add_argument('--threads', type=int, default=None,
                        help=f'Worker threads (default from {config.THREADS_ENV})')
    parser.add_argument('--out', type=str, help='Output file (output directory for reproduce)')
    parser.add_argument('--format', choices=FORMATS, default='csv', help='Record format')
    parser.add_argument('--resource', choices=['pnes', 'tmss', 'equal', 'vacuum'], help='Resource state')
    parser.add_argument('--coeffs', type=float, nargs='+', help='PNES coefficients C_0 ... C_N')
    parser.add_argument('--s', type=float, help='TMSS squeezing')
    parser.add_argument('--N', type=int, help='Largest photon number of an equal-coefficient PNES')
    parser.add_argument('--optimize', type=int, help='Optimize PNES coefficients for this N')
    parser.add_argument('--strategy', choices=[REAL_LINE, FULL_COMPLEX], default=REAL_LINE,
                        help='Bell setting domain')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command and return its exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)

    task_id = os.environ.get('SLURM_ARRAY_TASK_ID')
    logger = setup_logging(task_id)

    summary = {
        'command': args.command,
        'arguments': {k: v for k, v in vars(args).items()},
        'start_time': datetime.now().isoformat(),
        'status': 'success',
    }
    exit_code = EXIT_OK
    try:
        if args.threads is None:
            args.threads = default_threads()
        if args.eta is not None and not 0.0 <= args.eta <= 1.0:
            raise ConfigError(f"--eta must lie in [0, 1], got {args.eta}")
        if args.command == 'reproduce' and args.eta is None:
            args.eta = config.FEASIBILITY_ETA
        summary['results'] = COMMANDS[args.command](args, logger)
    except ToleranceFailure as e:
        logger.error(str(e))
        summary['status'] = 'tolerance_failure'
        exit_code = EXIT_TOLERANCE
    except (ConfigError, FockError, ValueError, OSError) as e:
        logger.error(f"Invalid input: {e}")
        summary['status'] = 'invalid'
        exit_code = EXIT_INVALID
    except HeraldError as e:
        logger.error(f"Run failed: {e}")
        summary['status'] = 'failed'
        exit_code = EXIT_FAILED

    summary['end_time'] = datetime.now().isoformat()
    with open(config.SUMMARY_FILE, 'w') as f:
        json.dump(summary, f, indent=2, default=_json_default)
    logger.info(f"Summary saved to: {config.SUMMARY_FILE}")
    return exit_code


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return str(value)


if __name__ == "__main__":
    sys.exit(main())
