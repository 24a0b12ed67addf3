"""
Scenario configs: JSON documents describing a resource or a scheme run,
parsed and validated into a frozen ScenarioConfig.

A scheme scenario gives the circuit in one of three ways, in order of
precedence: explicit circuit stages ("stages"), ideal operator parameters
mapped to the circuit ("ideal_stages"), or target coefficients fitted by the
optimizer ("target").
"""

import dataclasses
import json
import logging
import math
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import config
from optics_ops import SqueezerParams
from pnes_states import CoherentOpParams
from schemes import (DETECTOR_MODELS, PD1, PD1_CLICK, PD3, SINGLE_CLICK, CircuitCutoffs, Regime,
                     Scheme1StageParams, Scheme2StageParams)

logger = logging.getLogger(__name__)

RESOURCE_KINDS = ('pnes', 'tmss', 'equal', 'vacuum')
OUTPUTS = ('fidelity', 'success_probability', 'entropy', 'epr', 'teleport', 'bell')
GRIDS = ('n1', 'n2')


class ConfigError(ValueError):
    """A scenario document that does not validate"""


@dataclass(frozen=True)
class ResourceSpec:
    kind: str
    coefficients: Tuple[float, ...] = ()
    s: float = 0.0
    N: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    scheme: Optional[int] = None
    eta: float = config.FEASIBILITY_ETA
    cutoffs: CircuitCutoffs = CircuitCutoffs()
    regime: Regime = Regime()
    target: Optional[Tuple[float, ...]] = None
    ideal_stages: Tuple = ()
    stages: Tuple = ()
    resource: Optional[ResourceSpec] = None
    grid: Optional[str] = None
    delta_t: Tuple[float, ...] = ()
    outputs: Tuple[str, ...] = ('fidelity', 'success_probability')
    output_path: Optional[str] = None

    def with_overrides(self, eta: Optional[float] = None, signal: Optional[int] = None,
                       ancilla: Optional[int] = None, output_path: Optional[str] = None) -> 'ScenarioConfig':
        """Apply command-line overrides, revalidating what they touch"""
        changes: Dict[str, Any] = {}
        if eta is not None:
            changes['eta'] = _check_eta(eta)
            changes['regime'] = dataclasses.replace(self.regime, eta=changes['eta'])
        if signal is not None or ancilla is not None:
            changes['cutoffs'] = _cutoffs({'signal': signal or self.cutoffs.signal,
                                           'ancilla': ancilla or self.cutoffs.ancilla})
        if output_path is not None:
            changes['output_path'] = output_path
        return dataclasses.replace(self, **changes)


def _require(document: Dict[str, Any], key: str, kind) -> Any:
    if key not in document:
        raise ConfigError(f"Missing required field '{key}'")
    value = document[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"Field '{key}' must be {kind}, got {value!r}")
    return value


def _number(document: Dict[str, Any], key: str, default: Optional[float] = None) -> float:
    if key not in document:
        if default is None:
            raise ConfigError(f"Missing required field '{key}'")
        return default
    value = document[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"Field '{key}' must be a finite number, got {value!r}")
    return float(value)


def _check_eta(eta: float) -> float:
    if not 0.0 <= eta <= 1.0:
        raise ConfigError(f"eta must lie in [0, 1], got {eta}")
    return float(eta)


def _cutoffs(block: Dict[str, Any]) -> CircuitCutoffs:
    try:
        return CircuitCutoffs(int(block.get('signal', config.DEFAULT_SIGNAL_CUTOFF)),
                              int(block.get('ancilla', config.DEFAULT_ANCILLA_CUTOFF)))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid cutoffs {block}: {e}")


def _regime(block: Dict[str, Any], eta: float) -> Regime:
    detector = block.get('detector_model', SINGLE_CLICK)
    if detector not in DETECTOR_MODELS:
        raise ConfigError(f"detector_model must be one of {DETECTOR_MODELS}, got {detector!r}")
    coupling = _number(block, 'coupling', config.FEASIBILITY_COUPLING)
    t_squared = _number(block, 't_squared', config.FEASIBILITY_T_SQUARED)
    if coupling <= 0:
        raise ConfigError(f"coupling must be > 0, got {coupling}")
    if not 0.0 < t_squared < 1.0:
        raise ConfigError(f"t_squared must lie in (0, 1), got {t_squared}")
    return Regime(eta=eta, coupling=coupling, t_squared=t_squared, detector_model=detector,
                  alternate_branch=bool(block.get('alternate_branch', False)))


def _ideal_op(block: Dict[str, Any], with_squeeze: bool) -> CoherentOpParams:
    """{"r": .., "t_sign": +-1} or {"t": .., "r": ..}, plus "s"/"phi" for scheme 1"""
    squeeze = None
    if with_squeeze:
        squeeze = SqueezerParams(_number(block, 's', config.FEASIBILITY_COUPLING), _number(block, 'phi', 0.0))
    if 't' in block:
        return CoherentOpParams(_number(block, 't'), _number(block, 'r'), squeeze)
    return CoherentOpParams.from_reflectivity(_number(block, 'r'), _number(block, 't_sign', 1.0), squeeze)


def _ideal_stages(scheme: int, blocks: List[Dict[str, Any]]) -> Tuple:
    if scheme == 1:
        return tuple(_ideal_op(block, True) for block in blocks)
    return tuple((_ideal_op(_require(block, 'odd', dict), False),
                  _ideal_op(_require(block, 'even', dict), False)) for block in blocks)


def _circuit_stage(scheme: int, block: Dict[str, Any]):
    if scheme == 1:
        xi = SqueezerParams(_number(block, 's'), _number(block, 'phi', 0.0))
        return Scheme1StageParams(xi=xi, s_tap=_number(block, 's_tap'), T1=_number(block, 'T1'),
                                  T2=_number(block, 'T2'), t_n=_number(block, 't_n'),
                                  branch=block.get('branch', PD1_CLICK))
    return Scheme2StageParams(s1=_number(block, 's1'), s2=_number(block, 's2'), T1=_number(block, 'T1'),
                              T2=_number(block, 'T2'), t_odd=_number(block, 't_odd'),
                              t_even=_number(block, 't_even'),
                              branch_first=block.get('branch_first', PD1),
                              branch_second=block.get('branch_second', PD3),
                              phase_odd=_number(block, 'phase_odd', 0.0),
                              phase_even=_number(block, 'phase_even', 0.0))


def _resource(block: Dict[str, Any]) -> ResourceSpec:
    kind = block.get('kind')
    if kind not in RESOURCE_KINDS:
        raise ConfigError(f"resource.kind must be one of {RESOURCE_KINDS}, got {kind!r}")
    coefficients = tuple(float(c) for c in block.get('coefficients', ()))
    if kind == 'pnes' and not coefficients:
        raise ConfigError("A 'pnes' resource needs coefficients")
    s = _number(block, 's', 0.0)
    if s < 0:
        raise ConfigError(f"resource.s must be >= 0, got {s}")
    N = int(block.get('N', 0))
    if kind == 'equal' and N < 1:
        raise ConfigError(f"An 'equal' resource needs N >= 1, got {N}")
    return ResourceSpec(kind=kind, coefficients=coefficients, s=s, N=N)


def parse_scenario(document: Dict[str, Any], source: str = '<scenario>') -> ScenarioConfig:
    """Validate a decoded JSON document"""
    if not isinstance(document, dict):
        raise ConfigError(f"{source}: top level must be an object")
    try:
        name = str(document.get('name', os.path.splitext(os.path.basename(source))[0]))
        scheme = document.get('scheme')
        if scheme not in (None, 1, 2):
            raise ConfigError(f"scheme must be 1, 2 or null, got {scheme!r}")
        eta = _check_eta(_number(document, 'eta', config.FEASIBILITY_ETA))
        cutoffs = _cutoffs(document.get('cutoffs', {}))
        regime = _regime(document.get('regime', {}), eta)

        target = None
        if 'target' in document:
            target = tuple(float(c) for c in document['target'])
            norm2 = sum(c * c for c in target)
            if len(target) < 2 or norm2 <= 0:
                raise ConfigError(f"target needs at least two coefficients, got {target}")
            target = tuple(c / math.sqrt(norm2) for c in target)

        ideal_stages: Tuple = ()
        stages: Tuple = ()
        if scheme is not None:
            ideal_stages = _ideal_stages(scheme, document.get('ideal_stages', []))
            stages = tuple(_circuit_stage(scheme, block) for block in document.get('stages', []))

        resource = _resource(document['resource']) if 'resource' in document else None
        grid = document.get('grid')
        if grid is not None and grid not in GRIDS:
            raise ConfigError(f"grid must be one of {GRIDS}, got {grid!r}")
        delta_t = tuple(float(d) for d in document.get('delta_t', ()))
        outputs = tuple(document.get('outputs', ScenarioConfig.outputs))
        unknown = [o for o in outputs if o not in OUTPUTS]
        if unknown:
            raise ConfigError(f"Unknown outputs {unknown}; allowed {OUTPUTS}")
        output_path = document.get('output_path')

        if scheme is not None and not (stages or ideal_stages or target or grid):
            raise ConfigError("A scheme scenario needs stages, ideal_stages, target or grid")
        if scheme is None and resource is None:
            raise ConfigError("A scenario without a scheme needs a resource")
    except (ValueError, TypeError, KeyError) as e:
        raise ConfigError(f"{source}: {e}") from e

    return ScenarioConfig(name=name, scheme=scheme, eta=eta, cutoffs=cutoffs, regime=regime, target=target,
                          ideal_stages=ideal_stages, stages=stages, resource=resource, grid=grid,
                          delta_t=delta_t, outputs=outputs, output_path=output_path)


def load_scenario(path: str) -> ScenarioConfig:
    """Read and validate a scenario file; bare names resolve against the preset directory"""
    if not os.path.exists(path):
        preset = os.path.join(config.PRESET_DIR, path if path.endswith('.json') else f"{path}.json")
        if not os.path.exists(preset):
            raise ConfigError(f"Scenario file not found: {path}")
        path = preset
    try:
        with open(path, encoding='utf-8') as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: malformed JSON ({e})")
    scenario = parse_scenario(document, path)
    logger.info(f"Loaded scenario '{scenario.name}' from {path}")
    return scenario
