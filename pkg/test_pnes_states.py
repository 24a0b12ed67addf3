"""
Tests for PNES and TMSS constructors and the ideal coherent operators
"""

import math

import numpy as np
import pytest

from fock_core import FockCutoffs, PureState, TruncationError, fock_state, vacuum
from optics_ops import SqueezerParams
from pnes_states import (CoefficientError, CoherentOpParams, PnesCoefficients, apply_ideal_On,
                         apply_ideal_Oprime, canonical_phase, coefficient_fidelity, coefficients_of, equal_pnes,
                         ideal_On_sequence, ideal_Oprime_sequence, make_pair_coherent, make_pnes, make_tmss,
                         normalize_coeffs, tmss_coefficients, tmss_cutoff_for)


def test_coefficients_must_be_normalized():
    with pytest.raises(CoefficientError):
        PnesCoefficients([1.0, 1.0])
    with pytest.raises(CoefficientError):
        normalize_coeffs([0.0, 0.0])
    c = normalize_coeffs([3.0, 4.0])
    assert c.N == 1
    assert c.magnitudes() == pytest.approx([0.6, 0.8])


def test_make_pnes_places_coefficients_on_diagonal():
    state = make_pnes(normalize_coeffs([1, 2, 2]), 3)
    assert state.cutoffs.per_mode == (3, 3)
    np.testing.assert_allclose(np.diag(state.amplitudes), [1 / 3, 2 / 3, 2 / 3, 0])
    assert state.normalized
    with pytest.raises(CoefficientError):
        make_pnes(equal_pnes(3), 2)


def test_tmss_cutoff_and_truncation():
    s = 1.0
    cutoff = tmss_cutoff_for(s)
    assert math.tanh(s) ** (cutoff + 1) < 1e-8 <= math.tanh(s) ** cutoff
    state = make_tmss(s)
    assert state.normalized
    ratios = np.diag(state.amplitudes)[1:5] / np.diag(state.amplitudes)[:4]
    np.testing.assert_allclose(ratios.real, math.tanh(s))
    with pytest.raises(TruncationError):
        make_tmss(s, cutoff=3)


def test_tmss_coefficients_closed_form():
    c = tmss_coefficients(0.5, 30)
    assert np.sum(c ** 2) == pytest.approx(1.0, abs=1e-10)
    assert c[0] == pytest.approx(1 / math.cosh(0.5))


def test_pair_coherent_state():
    state = make_pair_coherent(0.5, 8)
    diagonal = np.diag(state.amplitudes)
    assert diagonal[1] / diagonal[0] == pytest.approx(0.5)
    assert diagonal[2] / diagonal[1] == pytest.approx(0.25)


def test_ideal_On_without_squeezing_is_number_diagonal():
    p = CoherentOpParams.from_reflectivity(0.6)
    out = apply_ideal_On(fock_state((3, 3), (2, 2)), p)
    assert out.amplitudes[2, 2] == pytest.approx(3 * 0.8 + 2 * 0.6)


def test_ideal_On_single_operation_on_vacuum():
    s = 0.4
    p = CoherentOpParams(0.3, math.sqrt(1 - 0.09), SqueezerParams(s, math.pi))
    state = apply_ideal_On(vacuum((2, 2)), p)
    ch, sh = math.cosh(s), math.sinh(s)
    assert state.amplitudes[0, 0] == pytest.approx(p.t * ch ** 2 + p.r * sh ** 2)
    assert state.amplitudes[1, 1] == pytest.approx((p.t + p.r) * ch * sh)


def test_ideal_Oprime_prepares_n1_pnes():
    p1 = CoherentOpParams(0.0, 1.0)
    p2 = CoherentOpParams(0.6, 0.8)
    out = apply_ideal_Oprime(vacuum((2, 2)), p1, p2)
    assert out.amplitudes[0, 0] == pytest.approx(0.6)
    assert out.amplitudes[1, 1] == pytest.approx(0.8)


def test_ideal_sequences_stay_diagonal():
    on = ideal_On_sequence([CoherentOpParams(0.3, math.sqrt(0.91), SqueezerParams(0.1, math.pi)),
                            CoherentOpParams(-0.2, math.sqrt(0.96), SqueezerParams(0.1, 0.0))], 2)
    assert coefficients_of(on).N == 2
    oprime = ideal_Oprime_sequence([(CoherentOpParams(0.0, 1.0), CoherentOpParams(0.6, 0.8)),
                                    (CoherentOpParams(0.6, 0.8), CoherentOpParams(0.8, 0.6))], 2)
    assert coefficients_of(oprime).N == 2
    assert oprime.normalized


def test_from_reflectivity_sign():
    p = CoherentOpParams.from_reflectivity(0.6, t_sign=-1)
    assert p.t == pytest.approx(-0.8)
    with pytest.raises(CoefficientError):
        CoherentOpParams(0.5, 0.5)


def test_coefficients_of_rejects_off_diagonal_states():
    amplitudes = np.zeros((2, 2))
    amplitudes[0, 1] = 1.0
    with pytest.raises(CoefficientError):
        coefficients_of(PureState(FockCutoffs((1, 1)), amplitudes))


def test_coefficients_of_trims_trailing_zeros_and_fixes_phase():
    state = make_pnes(normalize_coeffs([-0.6, -0.8]), 4)
    c = coefficients_of(state)
    assert c.N == 1
    np.testing.assert_allclose(c.coeffs, [0.6, 0.8])


def test_canonical_phase_and_fidelity():
    c = normalize_coeffs([1j, 2j])
    assert canonical_phase(c).coeffs[1].real == pytest.approx(2 / math.sqrt(5))
    assert coefficient_fidelity(c, canonical_phase(c)) == pytest.approx(1.0)
    assert coefficient_fidelity(normalize_coeffs([1, 0]), normalize_coeffs([0, 0, 1])) == pytest.approx(0.0)
