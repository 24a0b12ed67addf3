"""
Tests for beam splitters, two-mode squeezers and detector heralding
"""

import math

import numpy as np
import pytest

from fock_core import FockCutoffs, FockError, PureState, StateEnsemble, fock_state, normalize, vacuum
from optics_ops import (BeamSplitterParams, HeraldError, HeraldOutcome, OnOffDetector, Outcome, SqueezerParams,
                        apply_beam_splitter, apply_phase_rotation, apply_two_mode_squeezer, click_probability,
                        herald, herald_ensemble)


def test_beam_splitter_params_validation():
    with pytest.raises(FockError):
        BeamSplitterParams(0.5, 0.5)
    with pytest.raises(FockError):
        BeamSplitterParams.from_transmissivity(1.2)
    p = BeamSplitterParams.from_transmissivity(0.6)
    assert p.r == pytest.approx(0.8)


def test_beam_splitter_single_photon_convention():
    out = apply_beam_splitter(fock_state((2, 2), (1, 0)), 0, 1, BeamSplitterParams.from_transmissivity(0.6))
    assert out.amplitudes[1, 0] == pytest.approx(0.6)
    assert out.amplitudes[0, 1] == pytest.approx(-0.8)
    assert out.truncation_loss == pytest.approx(0.0, abs=1e-14)

    other = apply_beam_splitter(fock_state((2, 2), (0, 1)), 0, 1, BeamSplitterParams.from_transmissivity(0.6))
    assert other.amplitudes[0, 1] == pytest.approx(0.6)
    assert other.amplitudes[1, 0] == pytest.approx(0.8)
    swapped = apply_beam_splitter(fock_state((2, 2), (1, 0)), 1, 0, BeamSplitterParams.from_transmissivity(0.6))
    assert swapped.amplitudes[0, 1] == pytest.approx(0.8)


def test_hong_ou_mandel_dip():
    out = apply_beam_splitter(fock_state((2, 2), (1, 1)), 0, 1,
                              BeamSplitterParams.from_transmissivity(1 / math.sqrt(2)))
    assert abs(out.amplitudes[1, 1]) == pytest.approx(0.0, abs=1e-12)
    assert abs(out.amplitudes[2, 0]) ** 2 == pytest.approx(0.5)
    assert abs(out.amplitudes[0, 2]) ** 2 == pytest.approx(0.5)


def test_beam_splitter_is_norm_preserving_within_cutoffs():
    rng = np.random.default_rng(7)
    amplitudes = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    state = normalize(PureState(FockCutoffs((3, 3)), amplitudes))
    out = apply_beam_splitter(state, 0, 1, BeamSplitterParams.from_angle(0.7, 0.3))
    assert out.norm_squared + out.truncation_loss == pytest.approx(1.0)


def test_squeezer_on_vacuum_gives_tmss_magnitudes():
    s = 0.3
    out = apply_two_mode_squeezer(vacuum((12, 12)), 0, 1, SqueezerParams(s))
    n = np.arange(7)
    expected = math.tanh(s) ** n / math.cosh(s)
    np.testing.assert_allclose(np.abs(out.amplitudes[n, n]), expected, atol=1e-7)
    off_diagonal = out.amplitudes - np.diag(np.diag(out.amplitudes))
    assert np.max(np.abs(off_diagonal)) < 1e-12


def test_squeezer_inverse_restores_vacuum():
    p = SqueezerParams(0.2, 1.1)
    squeezed = apply_two_mode_squeezer(vacuum((10, 10)), 0, 1, p)
    back = apply_two_mode_squeezer(squeezed, 0, 1, p, inverse=True)
    assert abs(back.amplitudes[0, 0]) == pytest.approx(1.0, abs=1e-6)


def test_zero_squeezing_is_identity():
    state = fock_state((2, 2), (1, 2))
    assert apply_two_mode_squeezer(state, 0, 1, SqueezerParams(0.0)) is state


def test_phase_rotation():
    out = apply_phase_rotation(fock_state((2,), (2,)), 0, math.pi / 4)
    assert out.amplitudes[2] == pytest.approx(1j)


def test_click_probability():
    detector = OnOffDetector(0.5)
    state = fock_state((3, 1), (2, 0))
    assert click_probability(state, 0, detector) == pytest.approx(0.75)
    assert click_probability(vacuum((3, 1)), 0, detector) == pytest.approx(0.0)


def test_herald_no_click_on_pair_superposition():
    amplitudes = np.zeros((2, 2))
    amplitudes[0, 0] = amplitudes[1, 1] = 1 / math.sqrt(2)
    state = PureState(FockCutoffs((1, 1)), amplitudes)

    ensemble, probability = herald(state, [HeraldOutcome(1, OnOffDetector(0.5), Outcome.NO_CLICK)])
    assert probability == pytest.approx(0.75)
    assert len(ensemble) == 2
    assert sorted(w for w, _ in ensemble.members) == pytest.approx([0.25, 0.5])
    assert ensemble.cutoffs.per_mode == (1,)


def test_herald_click_with_perfect_detector():
    ensemble, probability = herald(fock_state((2, 2), (1, 1)),
                                   [HeraldOutcome(1, OnOffDetector(1.0), Outcome.CLICK)])
    assert probability == pytest.approx(1.0)
    _, member = ensemble.members[0]
    assert member.amplitudes[1] == pytest.approx(1.0)


def test_herald_photon_number_projection():
    ensemble, probability = herald(fock_state((2, 2), (1, 2)),
                                   [HeraldOutcome(1, OnOffDetector(1.0), Outcome.SINGLE_PHOTON)])
    assert probability == 0
    assert len(ensemble) == 0


def test_herald_pattern_validation():
    state = vacuum((1, 1, 1))
    detector = OnOffDetector(0.5)
    with pytest.raises(HeraldError):
        herald(state, [HeraldOutcome(1, detector, Outcome.CLICK), HeraldOutcome(1, detector, Outcome.CLICK)])
    with pytest.raises(HeraldError):
        herald(state, [HeraldOutcome(1, detector, Outcome.CLICK)], keep=[0, 1])
    with pytest.raises(HeraldError):
        herald(state, [HeraldOutcome(m, detector, Outcome.CLICK) for m in range(3)])


def test_herald_ensemble_probabilities_sum_to_one():
    detector = OnOffDetector(0.66)
    amplitudes = np.zeros((3, 3))
    amplitudes[0, 0], amplitudes[1, 1], amplitudes[2, 2] = 0.6, 0.64, 0.48
    state = normalize(PureState(FockCutoffs((2, 2)), amplitudes))
    ensemble = StateEnsemble(((0.4, state), (0.6, fock_state((2, 2), (0, 1)))))
    total = sum(herald_ensemble(ensemble, [HeraldOutcome(1, detector, outcome)])[1]
                for outcome in (Outcome.CLICK, Outcome.NO_CLICK))
    assert total == pytest.approx(1.0)


def test_detector_efficiency_validation():
    with pytest.raises(FockError):
        OnOffDetector(1.5)
