"""
Tests for record output and scenario config parsing
"""

import json
import math

import numpy as np
import pytest

from optics_ops import SqueezerParams
from records import CSV, JSON_LINES, RecordError, emit_records, format_value, read_csv_records
from scenario import ConfigError, load_scenario, parse_scenario
from schemes import PHOTON_NUMBER, SINGLE_CLICK, Scheme1StageParams, Scheme2StageParams


@pytest.mark.parametrize("value, text", [
    (None, ''),
    (True, 'true'),
    (3, '3'),
    (np.int64(7), '7'),
    (0.0, '0'),
    (2.5, '2.5'),
    (1 / 3, '0.333333333333'),
    (math.nan, 'nan'),
    (-math.inf, '-inf'),
    (1 - 2j, '1-2j'),
    ('tmss', 'tmss'),
])
def test_format_value(value, text):
    assert format_value(value) == text


def test_csv_records_with_header(tmp_path):
    path = str(tmp_path / 'sub' / 'rows.csv')
    rows = [{'c0_sq': 0.1, 'fidelity': 0.98765432101234, 'status': 'success'},
            {'c0_sq': 0.2, 'fidelity': None, 'status': 'error'}]
    emit_records(rows, path, CSV, header_lines=['check: fidelity >= 0.95'])

    with open(path, encoding='utf-8') as f:
        text = f.read()
    assert text.startswith('# check: fidelity >= 0.95\nc0_sq,fidelity,status\n')
    assert '\r' not in text

    back = read_csv_records(path)
    assert back[0] == {'c0_sq': '0.1', 'fidelity': '0.987654321012', 'status': 'success'}
    assert back[1]['fidelity'] == ''


def test_json_lines_records(tmp_path):
    path = str(tmp_path / 'rows.jsonl')
    emit_records([{'bell': 2.0, 'amplitude': 0.5 + 0.25j, 'n': np.int32(4)}], path, JSON_LINES)
    with open(path, encoding='utf-8') as f:
        row = json.loads(f.readline())
    assert row == {'bell': 2.0, 'amplitude': [0.5, 0.25], 'n': 4}


def test_records_must_share_columns(tmp_path):
    with pytest.raises(RecordError):
        emit_records([{'a': 1}, {'b': 2}], str(tmp_path / 'x.csv'))
    with pytest.raises(RecordError):
        emit_records([{'a': 1}], str(tmp_path / 'x.csv'), columns=['a', 'b'])
    with pytest.raises(RecordError):
        emit_records([{'a': 1}], str(tmp_path / 'x.xml'), fmt='xml')


def test_load_target_preset():
    scenario = load_scenario('teleport_scheme1')
    assert scenario.scheme == 1
    assert scenario.eta == 0.66
    assert scenario.regime.eta == 0.66
    assert scenario.cutoffs.signal == 10 and scenario.cutoffs.ancilla == 3
    assert sum(c * c for c in scenario.target) == pytest.approx(1.0)
    assert 'teleport' in scenario.outputs
    assert scenario.regime.detector_model == SINGLE_CLICK


def test_load_resource_preset():
    scenario = load_scenario('tmss_teleport.json')
    assert scenario.scheme is None
    assert scenario.resource.kind == 'tmss'
    assert scenario.resource.s == 0.506


def test_load_ideal_stage_preset():
    scenario = load_scenario('teleport_scheme2_quoted')
    assert len(scenario.ideal_stages) == 2
    odd, even = scenario.ideal_stages[0]
    assert (odd.t, odd.r) == (0.0, 1.0)
    assert even.t == pytest.approx(-math.sqrt(1 - 0.09))


def test_explicit_circuit_stages():
    document = {'scheme': 1,
                'regime': {'detector_model': PHOTON_NUMBER},
                'stages': [{'s': 0.1, 'phi': math.pi, 's_tap': 0.1, 'T1': 0.995, 'T2': 0.995, 't_n': 0.6}]}
    scenario = parse_scenario(document, 'explicit.json')
    assert scenario.name == 'explicit'
    assert scenario.stages == (Scheme1StageParams(SqueezerParams(0.1, math.pi), 0.1, 0.995, 0.995, 0.6),)
    assert scenario.regime.detector_model == PHOTON_NUMBER


def test_explicit_scheme2_stages_carry_phases():
    document = {'scheme': 2,
                'stages': [{'s1': 0.1, 's2': 0.1, 'T1': 0.995, 'T2': 0.995, 't_odd': 0.3, 't_even': 0.7,
                            'phase_even': 1.5}]}
    stage = parse_scenario(document).stages[0]
    assert stage == Scheme2StageParams(0.1, 0.1, 0.995, 0.995, 0.3, 0.7, phase_even=1.5)
    assert stage.phase_odd == 0.0


def test_overrides_revalidate():
    scenario = load_scenario('teleport_scheme1').with_overrides(eta=0.9, ancilla=4, output_path='out.csv')
    assert scenario.eta == 0.9 and scenario.regime.eta == 0.9
    assert scenario.cutoffs.ancilla == 4 and scenario.cutoffs.signal == 10
    assert scenario.output_path == 'out.csv'
    with pytest.raises(ConfigError):
        scenario.with_overrides(eta=-0.1)


@pytest.mark.parametrize("document", [
    {'scheme': 1, 'eta': 1.5, 'target': [1, 1]},
    {'scheme': 3, 'target': [1, 1]},
    {'scheme': 1},
    {'scheme': 1, 'target': [1]},
    {'scheme': 2, 'grid': 'n3'},
    {'resource': {'kind': 'tmss', 's': 0.5}, 'outputs': ['fidelity', 'concurrence']},
    {'resource': {'kind': 'pnes'}},
    {'resource': {'kind': 'equal', 'N': 0}},
    {'resource': {'kind': 'tmss', 's': -0.2}},
    {'resource': {'kind': 'cat'}},
    {'eta': 0.5},
    {'scheme': 1, 'target': [1, 1], 'regime': {'t_squared': 1.0}},
    {'scheme': 1, 'target': [1, 1], 'regime': {'detector_model': 'pnr'}},
    {'scheme': 2, 'ideal_stages': [{'odd': {'r': 0.3}}]},
    {'scheme': 1, 'stages': [{'s': 0.1, 's_tap': 0.1, 'T1': 0.99, 'T2': 0.99, 't_n': 1.5}]},
    [1, 2, 3],
])
def test_invalid_scenarios(document):
    with pytest.raises(ConfigError):
        parse_scenario(document)


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(str(tmp_path / 'absent.json'))
    broken = tmp_path / 'broken.json'
    broken.write_text('{"scheme": 1,', encoding='utf-8')
    with pytest.raises(ConfigError):
        load_scenario(str(broken))
