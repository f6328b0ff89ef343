import pytest

from gates import RING_EXCHANGE_TABLE, RK_TABLE
from verification import (
    check_decompositions, check_engine_equivalence, check_rydberg_numbers,
    ring_exchange_reference, run_checks,
)


def test_all_fast_checks_pass():
    results = run_checks(include_engines=False)
    failed = [(r.name, r.measured) for r in results if not r.passed]
    assert failed == []
    assert len(results) >= 15


def test_reference_ring_exchange_is_hermitian():
    b = ring_exchange_reference()
    assert (b == b.conj().T).all()
    assert b[0b1010, 0b0101] == 1


def test_flipped_ring_exchange_sign_is_caught():
    sign, letters = RING_EXCHANGE_TABLE[3]
    mutated = RING_EXCHANGE_TABLE[:3] + ((-sign, letters),) + RING_EXCHANGE_TABLE[4:]
    results = {r.name: r.passed for r in check_decompositions(mutated, RK_TABLE)}
    assert results["B_p 8-string form"] is False
    assert results["(S^z)^2 Ising form"] is True


def test_dropped_rk_string_is_caught():
    results = {r.name: r.passed for r in check_decompositions(RING_EXCHANGE_TABLE, RK_TABLE[1:])}
    assert results["B_p^2 8-string form"] is False


def test_rydberg_numbers():
    assert all(r.passed for r in check_rydberg_numbers())


@pytest.mark.slow
def test_engine_equivalence():
    assert check_engine_equivalence().passed
