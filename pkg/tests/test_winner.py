import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selinfer import use_backend
from selinfer.core import ContractViolation, DegenerateInputError, PVector
from selinfer.kernels import winner_counts
from selinfer.winner import (
    procedure_a,
    procedure_b,
    procedure_c,
    procedure_d,
    winner_adjust_nonselected,
    winner_adjust_selected,
    winner_select,
)


def test_select_and_adjust():
    p = PVector([0.3, 0.01, 0.2, 0.05])
    assert winner_select(p) == 2
    assert winner_adjust_selected(p, 2) == pytest.approx(0.2)
    assert winner_select(PVector([0.1, 0.1])) == 1
    with pytest.raises(ContractViolation):
        winner_adjust_selected(p, 1)


def test_adjust_degenerate():
    assert winner_adjust_selected(PVector([0.0, 0.0, 0.5]), 1) == 0.0
    with pytest.raises(DegenerateInputError):
        winner_adjust_nonselected(0.5, 1.0)
    assert winner_adjust_nonselected(0.55, 0.1) == pytest.approx(0.5)


def test_procedures_by_hand():
    p = PVector([0.0009, 0.2, 0.02, 0.5])
    a = procedure_a(p, 0.05)
    assert a.winner == 1 and a.adjusted_p_winner == pytest.approx(0.045)
    assert str(a.rejected) == "{1}"
    # stage two: (p - 0.0009)/0.9991 gives 0.0191 for hypothesis 3, below 0.0667/3
    assert str(procedure_b(p, 0.05).rejected) == "{1,3}"
    assert str(procedure_b(PVector([0.001, 0.2, 0.03, 0.5]), 0.05).rejected) == "{1}"
    assert str(procedure_c(p, 0.05).rejected) == "{1}"
    assert str(procedure_d(p, 0.05)) == "{1,3}"


def test_procedure_c_threshold():
    n = 10
    thr = 1 - 0.95 ** (1 / n)
    assert str(procedure_c(PVector([thr * 0.999] + [0.9] * 9), 0.05).rejected) == "{1}"
    assert str(procedure_c(PVector([thr * 1.001] + [0.9] * 9), 0.05).rejected) == "{}"


def test_b_level_guard():
    with pytest.raises(ContractViolation):
        procedure_b(PVector([0.1, 0.2]), 0.6)


pv = st.lists(st.floats(0, 1), min_size=2, max_size=15)


@settings(max_examples=300)
@given(pv, st.floats(0.005, 0.3))
def test_b_improves_a(p, alpha):
    if len(p) * alpha / (len(p) - 1) >= 1:
        return
    P = PVector(p)
    try:
        a, b = procedure_a(P, alpha), procedure_b(P, alpha)
    except DegenerateInputError:
        return
    assert a.rejected <= b.rejected


@settings(max_examples=200)
@given(st.lists(st.floats(1e-6, 1), min_size=3, max_size=30), st.floats(0.01, 0.2))
def test_kernel_matches_reference(p, alpha):
    P = PVector(p)
    want = [len(procedure_a(P, alpha).rejected), len(procedure_b(P, alpha).rejected),
            len(procedure_c(P, alpha).rejected), len(procedure_d(P, alpha))]
    for backend in ("numba", "numpy"):
        with use_backend(backend):
            got = winner_counts(np.array([p]), alpha)[0].tolist()
        assert got == want, backend


def test_backends_agree_on_ties_and_thresholds():
    rows = np.array([
        np.arange(1, 21) * 0.05 / 20,
        np.r_[0.0, 0.0, np.linspace(0.1, 1, 18)],
        np.full(20, 0.3),
    ])
    with use_backend("numba"):
        a = winner_counts(rows, 0.05)
    with use_backend("numpy"):
        b = winner_counts(rows, 0.05)
    assert np.array_equal(a, b)
