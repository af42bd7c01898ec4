"""One test per acceptance criterion, each at full budget.

Every test prints a PASS/FAIL line; the lines are repeated in the terminal
summary under "acceptance criteria".
"""
import pytest

from kzcocycle.verification import claims_by_id, run_claim

pytestmark = pytest.mark.slow


def check(claim_id, acceptance_log):
    record = run_claim(claims_by_id()[claim_id], budget=1.0)
    line = record.line()
    print(line)
    acceptance_log.append(line)
    failed = [f"{c.name}: expected {c.expected}, measured {c.measured}" for c in record.checks if not c.passed]
    assert record.passed, "; ".join(failed)


def test_genus_three_maximal_degeneracy(acceptance_log):
    check("M4_degenerate", acceptance_log)


def test_genus_four_maximal_degeneracy(acceptance_log):
    check("M6_1113_degenerate", acceptance_log)


def test_positive_exponent_count(acceptance_log):
    check("exponent_count", acceptance_log)


def test_exponent_values_m8(acceptance_log):
    check("M8_1133_values", acceptance_log)


def test_z_spectrum(acceptance_log):
    check("Z_spectrum", acceptance_log)


def test_second_fundamental_form_m6(acceptance_log):
    check("M6_1113_second_fundamental_form", acceptance_log)


def test_z_rank_structure(acceptance_log):
    check("Z_rank", acceptance_log)


def test_kontsevich_formula(acceptance_log):
    check("kontsevich_formula", acceptance_log)


def test_property_suites(acceptance_log):
    check("property_suites", acceptance_log)


def test_period_matrix_variation(acceptance_log):
    check("rauch_variation", acceptance_log)
