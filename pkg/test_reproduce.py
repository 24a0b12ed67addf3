"""
Tests for the figure runners and their acceptance checks
"""

import math

import pytest

from records import read_csv_records
from reproduce import (Check, FigureResult, RunSettings, ToleranceFailure, at_least, at_most, check_figure,
                       figure_1a, holds, near, reproduce_figure)


def test_check_helpers():
    assert near('x', 1.0005, 1.0, 1e-3).passed
    assert not near('x', 1.01, 1.0, 1e-3).passed
    assert at_least('x', 2.5, 2.3188).passed
    assert at_most('x', 1e-7, 1e-6).passed
    assert holds('x', True).passed and not holds('x', False).passed
    assert Check('x', 0.5, 0.0, 1.0).describe() == 'x: 0.5 within [0, 1] PASS'
    assert at_least('x', 1.0, 0.0).high == math.inf


def test_failed_checks_raise():
    result = FigureResult('5', 'figure_5.csv', [], [near('fidelity', 0.9, 0.996, 1e-3), holds('ok', True)])
    assert not result.passed
    assert [c.name for c in result.failures] == ['fidelity']
    with pytest.raises(ToleranceFailure, match='fidelity'):
        check_figure(result)
    check_figure(FigureResult('5', 'figure_5.csv', [], [holds('ok', True)]))


def test_unknown_figure():
    with pytest.raises(ValueError):
        reproduce_figure('3c')


def test_entropy_figure(tmp_path):
    result = figure_1a(RunSettings(out_dir=str(tmp_path)))
    assert result.passed, [c.describe() for c in result.failures]

    with open(result.path, encoding='utf-8') as f:
        assert f.readline() == '# figure 1a\n'
    rows = read_csv_records(result.path)
    assert len(rows) == 31
    assert float(rows[0]['entropy_tmss']) == 0.0
    assert float(rows[0]['entropy_pnes_N1']) == pytest.approx(1.0)
    entropies = [float(r['entropy_tmss']) for r in rows]
    assert entropies == sorted(entropies)
