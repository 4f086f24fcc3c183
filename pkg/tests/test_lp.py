from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from contractkit.core import Contract, build_instance, expected_payment
from contractkit.families import gen_example
from contractkit.lp import (
    DimensionMismatch,
    DualCertificate,
    LpProblem,
    NotOptimalInput,
    check_certificate,
    dual_objective,
    implements,
    implements_up_to_ties,
    is_implementable,
    min_payment_contract,
    min_payment_lp,
    min_payment_monotone,
    min_payment_problem,
    record_solves,
    solve_lp,
    sparsify_to_basic,
)

from conftest import instances


def test_small_lp_with_known_optimum():
    # min x + y  s.t.  x + 2y >= 4, 3x + y >= 6
    p = LpProblem([1, 1], [[1, 2], [3, 1]], [">=", ">="], [4, 6])
    sol = solve_lp(p)
    assert sol.status == "optimal"
    assert sol.values == (F(8, 5), F(6, 5)) and sol.objective == F(14, 5)
    assert check_certificate(p, sol)


def test_infeasible_lp_gets_a_farkas_vector():
    p = LpProblem([1], [[1], [1]], [">=", "<="], [2, 1])
    sol = solve_lp(p)
    assert sol.status == "infeasible"
    assert check_certificate(p, sol)


def test_unbounded_lp():
    p = LpProblem([-1, 0], [[1, -1]], ["<="], [1])
    assert solve_lp(p).status == "unbounded"


def test_equality_rows_redundancy_and_lower_bounds():
    p = LpProblem([2, 3], [[1, 1], [2, 2], [1, 0]], ["=", "=", ">="], [3, 6, 1], lb=[1, 1])
    sol = solve_lp(p)
    assert sol.objective == 7 and sol.values == (2, 1)
    assert check_certificate(p, sol)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        LpProblem([1, 1], [[1]], [">="], [0])
    with pytest.raises(DimensionMismatch):
        LpProblem([1], [[1]], [">=", "<="], [0])


def test_tampered_duals_fail_the_check():
    p = LpProblem([1, 1], [[1, 2], [3, 1]], [">=", ">="], [4, 6])
    sol = solve_lp(p)
    bad = type(sol)(sol.status, sol.values, sol.objective, sol.basis, (F(0), F(0)))
    assert not check_certificate(p, bad)


@st.composite
def small_lps(draw):
    nv = draw(st.integers(1, 4))
    nr = draw(st.integers(1, 4))
    coef = st.integers(-4, 4)
    A = [draw(st.lists(coef, min_size=nv, max_size=nv)) for _ in range(nr)]
    senses = draw(st.lists(st.sampled_from(["<=", ">=", "="]), min_size=nr, max_size=nr))
    b = draw(st.lists(st.integers(-6, 6), min_size=nr, max_size=nr))
    c = draw(st.lists(st.integers(-2, 5), min_size=nv, max_size=nv))
    lb = draw(st.lists(st.integers(-2, 2), min_size=nv, max_size=nv))
    return LpProblem(c, A, senses, b, lb)


def _scipy(p: LpProblem):
    A = np.array([[float(v) for v in row] for row in p.A])
    b = np.array([float(v) for v in p.b])
    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
    for row, bi, s in zip(A, b, p.senses):
        if s == "<=":
            ub_rows.append(row), ub_rhs.append(bi)
        elif s == ">=":
            ub_rows.append(-row), ub_rhs.append(-bi)
        else:
            eq_rows.append(row), eq_rhs.append(bi)
    return linprog([float(v) for v in p.c],
                   A_ub=np.array(ub_rows) if ub_rows else None, b_ub=ub_rhs or None,
                   A_eq=np.array(eq_rows) if eq_rows else None, b_eq=eq_rhs or None,
                   bounds=[(float(l), None) for l in p.lb], method="highs")


@settings(max_examples=300, deadline=None)
@given(small_lps())
def test_simplex_agrees_with_float_oracle(p):
    ours = solve_lp(p)
    ref = _scipy(p)
    expected = {0: "optimal", 2: "infeasible", 3: "unbounded"}[ref.status]
    assert ours.status == expected
    if ours.optimal:
        assert abs(float(ours.objective) - ref.fun) < 1e-7
    assert check_certificate(p, ours)


def test_example12_minimum_payment():
    e12 = gen_example("example12")
    c = min_payment_contract(e12, 1)
    assert c.payments == (0, F(4, 3))
    assert min_payment_contract(e12, 0).payments == (0, 0)


def test_example11_target_action_costs_more_when_monotone():
    e11 = gen_example("example11")
    free = min_payment_contract(e11, 2)
    mono = min_payment_monotone(e11, 2)
    # the unconstrained expected payment is roughly 2.04
    assert abs(float(expected_payment(e11, 2, free)) - 2.04) < 0.005
    assert free.positive_count() <= 3 and not free.is_monotone()
    assert expected_payment(e11, 2, mono) > expected_payment(e11, 2, free)


def test_non_implementable_action_gets_mixture_certificate():
    inst = build_instance([0, 1, 2], [(["1/2", "1/2", 0], 0), (["1/4", "1/2", "1/4"], 1),
                                      ([0, "1/2", "1/2"], 1)])
    cert = min_payment_contract(inst, 1)
    assert isinstance(cert, DualCertificate)
    assert cert.kind == "non-implementability"
    assert cert.lambdas == {0: F(1, 2), 2: F(1, 2)}
    assert cert.verify(inst)
    assert is_implementable(inst, 1) == (False, cert)


def test_monotone_certificate_is_a_dominating_mixture():
    inst = build_instance([0, 1, 2], [([1, 0, 0], 0), ([0, 1, 0], 1), ([0, 0, 1], "1/2")])
    assert isinstance(min_payment_contract(inst, 1), Contract)
    cert = min_payment_monotone(inst, 1)
    assert isinstance(cert, DualCertificate)
    assert cert.kind == "monotone-non-implementability"
    assert cert.lambdas == {2: 1}
    assert cert.mus == (0, 1)
    assert cert.verify(inst)


def test_forged_certificate_is_rejected():
    inst = build_instance([0, 1, 2], [(["1/2", "1/2", 0], 0), (["1/4", "1/2", "1/4"], 1),
                                      ([0, "1/2", "1/2"], 1)])
    assert not DualCertificate(1, "non-implementability", {0: F(1, 3), 2: F(2, 3)}).verify(inst)
    assert not DualCertificate(1, "non-implementability", {0: F(1, 2), 2: F(1, 2), 1: F(0)}).verify(inst)


def test_sparsify_reduces_support():
    inst = build_instance([1, 2, 3], [(["1/2", "1/4", "1/4"], 0), ([0, "1/2", "1/2"], "1/2")])
    spread = Contract([0, 1, 1])
    assert implements(inst, 1, spread)
    sparse = sparsify_to_basic(inst, 1, spread)
    assert sparse.positive_count() == 1
    assert expected_payment(inst, 1, sparse) == 1
    with pytest.raises(NotOptimalInput):
        sparsify_to_basic(inst, 1, Contract([0, 2, 2]))
    with pytest.raises(NotOptimalInput):
        sparsify_to_basic(inst, 1, Contract([0, 0, 0]))


def test_record_solves_collects_problems():
    with record_solves() as log:
        min_payment_contract(gen_example("example12"), 1)
    assert len(log) == 1 and log[0][1].optimal


@settings(max_examples=150, deadline=None)
@given(instances(free_action=False))
def test_min_payment_duality_and_certificates(inst):
    for a in range(inst.n):
        for monotone in (False, True):
            problem = min_payment_problem(inst, a, monotone)
            sol = solve_lp(problem)
            assert check_certificate(problem, sol)
            res = min_payment_monotone(inst, a) if monotone else min_payment_contract(inst, a)
            if sol.optimal:
                assert isinstance(res, Contract)
                assert implements_up_to_ties(inst, a, res)
                assert expected_payment(inst, a, res) == sol.objective
                if not monotone:
                    assert dual_objective(inst, a, sol) == sol.objective
                    rows = inst.n - 1 + (0 if inst.assumptions.A3 else 1)
                    assert res.positive_count() <= rows
            else:
                assert sol.status == "infeasible"
                assert isinstance(res, DualCertificate) and res.verify(inst)


@settings(max_examples=100, deadline=None)
@given(instances())
def test_min_payment_matches_float_oracle(inst):
    for a in range(inst.n):
        ours = min_payment_lp(inst, a)
        ref = _scipy(min_payment_problem(inst, a))
        assert ours.optimal == (ref.status == 0)
        if ours.optimal:
            assert abs(float(ours.objective) - ref.fun) < 1e-7
