import numpy as np
import pytest

from verihom.verifier import (
    CONSTANT_DECIMALS,
    ROUNDED_CONSTANTS,
    SUBMATRIX_FAMILIES,
    check_diagonal_formulas,
    check_operator_identities,
    check_scalar_inequalities,
    check_submatrix_positivity,
    diagonal_closed_form,
    eval_constants,
    exact_constants,
)


def test_constants_pass():
    table, report = eval_constants()
    assert report.passed, report
    # spot values of the closed forms
    np.testing.assert_allclose(table.exact["c_1"], np.sqrt(8.0 / 5.0) * (np.sqrt(2.0) - 1.0))
    np.testing.assert_allclose(table.exact["c_2_3_plus"], 1.0)
    # decimal prefixes truncate, rounded values dominate
    for key, val in table.exact.items():
        assert float(CONSTANT_DECIMALS[key]) <= val
        assert ROUNDED_CONSTANTS[key] >= val


def test_constant_numeric_values():
    exact = exact_constants()
    np.testing.assert_allclose(exact["c_1"], 0.5239433179, atol=1e-9)
    np.testing.assert_allclose(exact["c_2"], 1.0847231055, atol=1e-9)
    np.testing.assert_allclose(exact["c_2_3_minus"], 0.0837536, atol=1e-6)
    np.testing.assert_allclose(exact["c_3"], 0.604998, atol=1e-6)


@pytest.mark.parametrize("family", ["a1", "503", "501", "502"])
def test_diagonal_formulas_small_grid(family):
    report = check_diagonal_formulas(family, n_max=8, m_max=8)
    assert report.passed, report


def test_diagonal_closed_form_values():
    # n = 0 limits are simple: only the delta terms survive
    np.testing.assert_allclose(diagonal_closed_form("501", 0, 3), 3.0 / 16.0)
    np.testing.assert_allclose(diagonal_closed_form("502", 0, 5), 0.0)
    assert diagonal_closed_form("a1", 1, 1) > 0.0
    assert diagonal_closed_form("a1", 0, 0) == 0.0


@pytest.mark.parametrize("family", ["1", "2", "3", "4"])
def test_submatrix_positivity_small_grid(family):
    report = check_submatrix_positivity(family, n_max=60, m_max=60, u_max=6, w_max=6)
    assert report.passed, report
    assert report.max_violation >= -1e-12


def test_submatrix_family_list():
    assert len(SUBMATRIX_FAMILIES) == 15


def test_scalar_inequalities():
    reports = check_scalar_inequalities(samples=10 ** 4, seed=7, grid_max=500)
    for r in reports:
        assert r.passed, r


def test_operator_identities():
    report = check_operator_identities(cutoff=8)
    assert report.passed, report
    assert report.max_violation <= 1e-8
