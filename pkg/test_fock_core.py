"""
Tests for the truncated Fock-space state algebra
"""

import math

import numpy as np
import pytest

from fock_core import (ANNIHILATE, CREATE, DimensionLimitError, FockCutoffs, FockError, PureState,
                       StateEnsemble, apply_ladder, apply_number, displacement_matrix, fidelity_pure_vs_ensemble,
                       fock_state, inner, mode_photon_distribution, normalize, pad_state, partial_trace,
                       tensor_vacuum, vacuum)


def test_cutoffs_validation():
    assert FockCutoffs((2, 3)).dims == (3, 4)
    assert FockCutoffs((2, 3)).total_dimension == 12
    with pytest.raises(FockError):
        FockCutoffs(())
    with pytest.raises(FockError):
        FockCutoffs((2, 0))


def test_vacuum_and_fock_state():
    state = vacuum((2, 2))
    assert state.normalized
    assert state.amplitudes[0, 0] == 1

    state = fock_state((3, 1), (2, 1))
    assert state.amplitudes[2, 1] == 1
    with pytest.raises(FockError):
        fock_state((3, 1), (2, 2))


def test_amplitudes_are_read_only():
    state = vacuum((1, 1))
    with pytest.raises(ValueError):
        state.amplitudes[0, 0] = 0


def test_ladder_operators():
    one = apply_ladder(vacuum((3,)), 0, CREATE)
    assert one.amplitudes[1] == pytest.approx(1.0)

    two = apply_ladder(one, 0, CREATE)
    assert two.amplitudes[2] == pytest.approx(math.sqrt(2))

    back = apply_ladder(two, 0, ANNIHILATE)
    assert back.amplitudes[1] == pytest.approx(2.0)


def test_creation_at_cutoff_records_loss():
    top = fock_state((2,), (2,))
    raised = apply_ladder(top, 0, CREATE)
    assert raised.norm_squared == 0
    assert raised.truncation_loss == pytest.approx(3.0)


def test_number_operator():
    state = normalize(PureState(FockCutoffs((3,)), [1, 1, 1, 1]))
    counted = apply_number(state, 0)
    np.testing.assert_allclose(counted.amplitudes, np.arange(4) / 2)


def test_inner_pads_smaller_cutoffs():
    small = fock_state((1, 1), (1, 1))
    large = fock_state((4, 4), (1, 1))
    assert inner(small, large) == pytest.approx(1.0)
    assert pad_state(small, (4, 4)).cutoffs.per_mode == (4, 4)
    with pytest.raises(FockError):
        pad_state(large, (1, 1))


def test_tensor_vacuum_appends_modes():
    state = tensor_vacuum(fock_state((2, 2), (1, 0)), [3])
    assert state.cutoffs.per_mode == (2, 2, 3)
    assert state.amplitudes[1, 0, 0] == 1


def test_partial_trace_of_bell_like_state():
    amplitudes = np.zeros((2, 2))
    amplitudes[0, 0] = amplitudes[1, 1] = 1 / math.sqrt(2)
    state = PureState(FockCutoffs((1, 1)), amplitudes)

    rho = partial_trace(state, [0])
    np.testing.assert_allclose(rho.matrix, np.eye(2) / 2, atol=1e-15)
    assert rho.trace == pytest.approx(1.0)
    assert rho.purity() == pytest.approx(0.5)


def test_partial_trace_rejects_bad_keep():
    state = vacuum((1, 1))
    with pytest.raises(FockError):
        partial_trace(state, [0, 1])
    with pytest.raises(FockError):
        partial_trace(state, [2])


def test_partial_trace_dimension_limit():
    state = vacuum((4096, 1))
    with pytest.raises(DimensionLimitError):
        partial_trace(state, [0])


def test_ensemble_normalization_and_compression():
    a = fock_state((1, 1), (0, 0))
    b = fock_state((1, 1), (1, 1))
    c = normalize(PureState(a.cutoffs, a.amplitudes + b.amplitudes))
    ensemble = StateEnsemble(((0.2, a), (0.3, b), (0.1, c)))

    assert ensemble.total_weight == pytest.approx(0.6)
    assert ensemble.normalized().total_weight == pytest.approx(1.0)

    compressed = ensemble.compressed()
    assert len(compressed) == 2
    assert compressed.total_weight == pytest.approx(0.6)
    np.testing.assert_allclose(compressed.density_matrix(), ensemble.density_matrix(), atol=1e-12)


def test_ensemble_members_must_share_cutoffs():
    with pytest.raises(FockError):
        StateEnsemble(((0.5, vacuum((1, 1))), (0.5, vacuum((2, 2)))))
    with pytest.raises(FockError):
        StateEnsemble(((-0.1, vacuum((1, 1))),))


def test_fidelity_against_mixture():
    a = fock_state((1, 1), (0, 0))
    b = fock_state((1, 1), (1, 1))
    mixture = StateEnsemble(((1.0, a), (3.0, b)))
    assert fidelity_pure_vs_ensemble(a, mixture) == pytest.approx(0.25)
    assert fidelity_pure_vs_ensemble(b, mixture) == pytest.approx(0.75)


def test_displacement_matrix_on_vacuum_is_coherent_state():
    alpha = 0.4 - 0.3j
    column = displacement_matrix(alpha, 20)[:, 0]
    n = np.arange(21)
    expected = np.exp(-abs(alpha) ** 2 / 2) * alpha ** n / np.sqrt([math.factorial(k) for k in n])
    np.testing.assert_allclose(column, expected, atol=1e-14)


def test_displacement_matrix_is_unitary_at_large_cutoff():
    matrix = displacement_matrix(0.5, 60)[:, :20]
    np.testing.assert_allclose(matrix.conj().T @ matrix, np.eye(20), atol=1e-10)


def test_mode_photon_distribution():
    amplitudes = np.zeros((3, 3))
    amplitudes[0, 1] = amplitudes[2, 0] = 1.0
    state = PureState(FockCutoffs((2, 2)), amplitudes)
    np.testing.assert_allclose(mode_photon_distribution(state, 0), [0.5, 0.0, 0.5])
