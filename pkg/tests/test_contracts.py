from fractions import Fraction as F

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from contractkit.core import (
    AssumptionViolated,
    Contract,
    LinearContract,
    PreconditionFailed,
    agent_best_response,
    build_instance,
    principal_payoff,
)
from contractkit.contracts import (
    LengthMismatch,
    best_debt,
    best_linear,
    best_monotone,
    cdfp_check,
    fosd_check,
    implemented_action,
    indifference_alpha,
    line_envelope,
    mlrp_check,
    optimal_contract,
    regularity_report,
    single_payment_contract,
    single_payment_search,
    two_action_optimal,
    upper_envelope,
)
from contractkit.families import gen_example, gen_random_spanning, gen_thm52
from contractkit.lp import min_payment_contract, min_payment_problem

from conftest import instances, spanning
from test_lp import _scipy


def linear_oracle(inst):
    """Best linear payoff by scoring every alpha where the agent's choice can change."""
    R, c = inst.rewards, inst.costs
    cands = {F(0), F(1)}
    for i in range(inst.n):
        if R[i] > 0:
            cands.add(c[i] / R[i])
        for k in range(inst.n):
            if R[k] != R[i]:
                cands.add((c[k] - c[i]) / (R[k] - R[i]))
    return max(principal_payoff(inst, LinearContract(a)) for a in cands if 0 <= a <= 1)


def test_envelope_of_diagonal_family():
    eps = F(1, 10)
    inst = gen_thm52(5, eps)
    env = upper_envelope(inst)
    assert env.implementable == (0, 1, 2, 3, 4)
    assert env.breakpoints == tuple(1 - eps ** i for i in range(5))
    for i in range(1, 5):
        assert env.breakpoints[i] == indifference_alpha(inst, i - 1, i)
        assert (1 - env.breakpoints[i]) * inst.rewards[i] == 1


def test_envelope_needs_assumptions():
    inst = build_instance([0, 1], [([1, 0], 1), ([0, 1], 2)])
    with pytest.raises(AssumptionViolated):
        upper_envelope(inst)


def test_line_envelope_handles_parallel_and_concurrent_lines():
    # three lines through (1/2, 0) plus a parallel, dearer copy of the middle one
    env = line_envelope([0, 1, 2, 1], [0, F(1, 2), 1, 1])
    assert env.implementable == (0, 2)
    assert env.breakpoints == (0, F(1, 2))
    assert env.action_at(F(1, 2)) == 2
    assert line_envelope([1], [2]).segments == ()


def test_example12_linear_and_optimal():
    e12 = gen_example("example12")
    assert best_linear(e12).payoff == 1
    opt = optimal_contract(e12)
    assert opt.payoff == F(5, 3) and opt.action == 1


def test_example11_optimum():
    e11 = gen_example("example11")
    opt = optimal_contract(e11)
    assert opt.action == 2
    assert abs(float(opt.payoff) - 2.95) < 0.01
    assert opt.contract.positive_count() <= 3 and not opt.contract.is_monotone()


def test_debt_contract_on_example12():
    res = best_debt(gen_example("example12"))
    # paying only at the top outcome: 3*alpha = 4/3
    assert (res.cut, res.alpha, res.action, res.payoff) == (1, F(4, 9), 1, F(5, 3))


def test_hiring_at_a_loss_loses_to_staying_out():
    # a constant payment of 1 implements the cheaper action, but the principal nets -1/2
    inst = build_instance([0, 1], [(["1/2", "1/2"], 1), (["1/2", "1/2"], 2)])
    opt = optimal_contract(inst)
    assert opt.action is None and opt.payoff == 0
    assert opt.contract.payments == (0, 0)
    assert min_payment_contract(inst, 0).payments in ((1, 1), (2, 0), (0, 2))


def test_mlrp_and_fosd():
    assert mlrp_check(gen_thm52(4, F(1, 2)))
    assert not mlrp_check(gen_example("exampleD5"))
    assert fosd_check([0, 0, 1], [1, 0, 0]) and not fosd_check([1, 0, 0], [0, 0, 1])
    with pytest.raises(LengthMismatch):
        fosd_check([1], [0, 1])


def test_cdfp_violation_is_reported():
    inst = build_instance([0, 1], [([1, 0], 0), (["3/4", "1/4"], 1), ([0, 1], 2)])
    ok, witness = cdfp_check(inst, 1)
    assert not ok and (witness.low, witness.high, witness.lam) == (0, 2, F(1, 2))
    assert regularity_report(inst).cdfp is False
    assert cdfp_check(build_instance([0, 1], [([1, 0], 0), (["1/4", "3/4"], 1), ([0, 1], 2)]), 1)[0]


def test_single_payment_contract_on_diagonal_family():
    inst = gen_thm52(3, F(1, 2))
    # costs (0, 1/2, 2): the binding pair is (a_3, a_1) with ratio 2/1
    assert single_payment_contract(inst).payments == (0, 0, 2)
    with pytest.raises(PreconditionFailed):
        single_payment_contract(gen_example("exampleD5"))


@settings(max_examples=150, deadline=None)
@given(spanning(), st.lists(st.fractions(0, 1), min_size=5, max_size=5))
def test_implemented_action_matches_best_response(inst, alphas):
    for alpha in alphas:
        assert implemented_action(inst, alpha) == agent_best_response(inst, LinearContract(alpha)).choice


@settings(max_examples=150, deadline=None)
@given(spanning())
def test_best_linear_matches_oracle(inst):
    res = best_linear(inst)
    assert res.payoff == linear_oracle(inst)
    assert principal_payoff(inst, LinearContract(res.alpha)) == res.payoff
    for k in range(21):
        assert principal_payoff(inst, LinearContract(F(k, 20))) <= res.payoff


@settings(max_examples=100, deadline=None)
@given(instances(free_action=False))
def test_optimal_contract_matches_float_oracle(inst):
    best = None if inst.assumptions.A3 else 0.0
    for a in range(inst.n):
        ref = _scipy(min_payment_problem(inst, a))
        if ref.status == 0:
            val = float(inst.rewards[a]) - ref.fun
            best = val if best is None else max(best, val)
    opt = optimal_contract(inst)
    assert abs(float(opt.payoff) - best) < 1e-7
    assert principal_payoff(inst, opt.contract) == opt.payoff


@settings(max_examples=100, deadline=None)
@given(instances(free_action=False))
def test_restricted_classes_never_beat_optimum(inst):
    opt = optimal_contract(inst).payoff
    mono = best_monotone(inst)
    assert mono.contract.is_monotone() and mono.payoff <= opt
    assert linear_oracle(inst) <= mono.payoff  # linear contracts are monotone
    if not inst.assumptions.missing("A1", "A2", "A3"):
        assert best_debt(inst).payoff <= opt


@settings(max_examples=100, deadline=None)
@given(instances(n_min=2, n_max=2))
def test_two_action_closed_form(inst):
    assert two_action_optimal(inst).payoff == optimal_contract(inst).payoff


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10 ** 6))
def test_single_payment_search_on_two_outcomes(n, seed):
    inst = gen_random_spanning(n, 2, seed)
    assert single_payment_search(inst).payoff == optimal_contract(inst).payoff


@settings(max_examples=60, deadline=None)
@given(spanning())
def test_single_payment_matches_lp_for_top_action(inst):
    top = inst.costs.index(max(inst.costs))
    contract = single_payment_contract(inst)
    lp = _scipy(min_payment_problem(inst, top))
    assert abs(float(sum(p * t for p, t in zip(inst.actions[top].probs, contract.payments))) - lp.fun) < 1e-9
