"""
Tests for entropy, EPR correlation, characteristic and Wigner functions
"""

import math

import numpy as np
import pytest

from fock_core import FockError, StateEnsemble, fock_state, vacuum
from measures import (WIGNER_PREFACTOR, PhasePoint, characteristic_fn, entanglement_entropy,
                      entanglement_entropy_tmss, epr_correlation, epr_quadratic_form, epr_tmss, minimize_epr_pnes,
                      reduced_density, squeezing_db, wigner)
from pnes_states import equal_pnes, make_pnes, make_tmss, normalize_coeffs


@pytest.mark.parametrize("N", [1, 2, 10])
def test_entropy_of_equal_pnes(N):
    assert entanglement_entropy(make_pnes(equal_pnes(N), N)) == pytest.approx(math.log2(N + 1))


def test_entropy_of_product_state_is_zero():
    assert entanglement_entropy(vacuum((3, 3))) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("s", [0.3, 0.8])
def test_tmss_entropy_matches_closed_form(s):
    assert entanglement_entropy(make_tmss(s)) == pytest.approx(entanglement_entropy_tmss(s), abs=1e-5)


def test_entropy_needs_normalized_state():
    state = make_pnes(equal_pnes(1), 1)
    with pytest.raises(FockError):
        entanglement_entropy(state.with_amplitudes(2 * state.amplitudes))


def test_epr_of_vacuum_is_two():
    assert epr_correlation(vacuum((2, 2))) == pytest.approx(2.0)


def test_epr_of_tmss():
    assert epr_correlation(make_tmss(0.5)) == pytest.approx(epr_tmss(0.5), abs=5e-6)


def test_epr_matches_quadratic_form():
    coeffs = normalize_coeffs([0.7, 0.5, 0.3, 0.2])
    c = coeffs.coeffs.real
    expected = float(c @ epr_quadratic_form(3) @ c)
    assert epr_correlation(make_pnes(coeffs, 3)) == pytest.approx(expected)


def test_minimal_epr_for_n1():
    value, coeffs = minimize_epr_pnes(1)
    assert value == pytest.approx(2 * (2 - math.sqrt(2)))
    assert all(c > 0 for c in coeffs.magnitudes())


def test_minimal_epr_decreases_with_n():
    values = [minimize_epr_pnes(N)[0] for N in (1, 2, 5, 10)]
    assert values == sorted(values, reverse=True)


def test_epr_of_mixture_uses_weights():
    mixture = StateEnsemble(((1.0, vacuum((2, 2))), (1.0, fock_state((2, 2), (1, 1)))))
    # each member has zero quadrature means, so variances average: (2 + 6) / 2
    assert epr_correlation(mixture) == pytest.approx(4.0)


def test_reduced_density_of_equal_pnes():
    rho = reduced_density(make_pnes(equal_pnes(2), 2), 1)
    np.testing.assert_allclose(rho.matrix, np.eye(3) / 3, atol=1e-14)


def test_squeezing_db():
    assert squeezing_db(0.0) == 0.0
    assert squeezing_db(math.log(10) / 2) == pytest.approx(10.0)


def test_characteristic_function_of_vacuum():
    value = characteristic_fn(vacuum((6, 6)), 0.3 + 0.1j, -0.2j)
    assert value == pytest.approx(math.exp(-0.5 * (0.1 + 0.04)), abs=1e-12)


def test_wigner_of_vacuum():
    assert wigner(vacuum((2, 2)), PhasePoint(0, 0)) == pytest.approx(WIGNER_PREFACTOR)
    assert wigner(vacuum((2, 2)), PhasePoint(0.5, 0)) == pytest.approx(WIGNER_PREFACTOR * math.exp(-0.5))


def test_wigner_at_origin_is_parity():
    # W(0, 0) is (4 / pi^2) times the expected joint parity, which is +1 for any PNES
    assert wigner(make_pnes(equal_pnes(3), 3), PhasePoint(0, 0)) == pytest.approx(WIGNER_PREFACTOR)
    assert wigner(fock_state((2, 2), (1, 0)), PhasePoint(0, 0)) == pytest.approx(-WIGNER_PREFACTOR)
