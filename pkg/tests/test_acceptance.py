"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` for the per-criterion
lines, or via the CLI: ``lownoise verify``.
"""
from lownoise.verify import (
    check_ancilla_bell,
    check_attainment,
    check_monte_carlo,
    check_negative_control,
    check_pauli,
    check_property_suite,
    check_threelevel,
)


def _report(index: int, result) -> None:
    status = "PASS" if result.passed else "FAIL"
    print(f"{status} criterion {index}: {result.name} ({result.seconds:.1f}s) -- {result.detail}")
    assert result.passed, f"criterion {index} failed: {result.detail}"


def test_criterion_1_ancilla_bell_closed_forms():
    _report(1, check_ancilla_bell())


def test_criterion_2_pauli_closed_forms():
    _report(2, check_pauli())


def test_criterion_3_threelevel_closed_forms():
    _report(3, check_threelevel())


def test_criterion_4_attainment_orders():
    _report(4, check_attainment())


def test_criterion_5_negative_control():
    _report(5, check_negative_control())


def test_criterion_6_property_suite():
    _report(6, check_property_suite(100))


def test_criterion_7_monte_carlo():
    _report(7, check_monte_carlo(10**6))
