"""Linear, monotone, debt and optimal contracts, plus regularity checks.

Linear contracts are handled geometrically: under a linear contract with
parameter alpha the agent's utility for action a is the line
``alpha * R_a - c_a``, so the implemented action is read off the upper
envelope of those lines.  Optimal and monotone contracts come from one
minimum-payment LP per action.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, NamedTuple, Optional, Sequence, Tuple

from .core import (
    AssumptionViolated,
    Contract,
    ContractError,
    Instance,
    LinearContract,
    PreconditionFailed,
    agent_best_response,
    best_response_from_expectations,
    expected_payment,
    principal_payoff,
)
from .lp import DualCertificate, LpError, min_payment_contract, min_payment_monotone

ZERO = Fraction(0)
ONE = Fraction(1)


class NoImplementableAction(ContractError):
    pass


class LengthMismatch(ContractError, ValueError):
    pass


class Segment(NamedTuple):
    lo: Fraction
    hi: Fraction
    action: int


@dataclass(frozen=True)
class Envelope:
    """Nonnegative part of the upper envelope of ``alpha*slope_a - cost_a`` on [0, 1].

    ``segments[i]`` covers ``[lo, hi)``; the last one also contains its
    ``hi``.  Below the first breakpoint the envelope is negative and no
    action is implemented.
    """

    segments: tuple

    @property
    def breakpoints(self) -> tuple:
        return tuple(s.lo for s in self.segments)

    @property
    def implementable(self) -> tuple:
        return tuple(s.action for s in self.segments)

    @property
    def N(self) -> int:
        return len(self.segments)

    def action_at(self, alpha) -> Optional[int]:
        alpha = Fraction(alpha)
        found = None
        for seg in self.segments:
            if seg.lo <= alpha:
                found = seg.action
            else:
                break
        return found


class LinearResult(NamedTuple):
    alpha: Fraction
    action: Optional[int]
    payoff: Fraction


class ContractResult(NamedTuple):
    action: Optional[int]  # None: the zero contract, and the agent stays out
    contract: Contract
    payoff: Fraction


class DebtResult(NamedTuple):
    cut: int  # payments are zero on outcomes with index < cut (0-based)
    alpha: Fraction
    action: Optional[int]
    payoff: Fraction

    def contract(self, instance: Instance) -> Contract:
        return debt_contract(instance, self.cut, self.alpha)


def _crossing(l1, l2) -> Fraction:
    # lines are (slope, cost, index); value = slope * alpha - cost
    return (l2[1] - l1[1]) / (l2[0] - l1[0])


def line_envelope(slopes: Sequence[Fraction], costs: Sequence[Fraction],
                  lo: Fraction = ZERO, hi: Fraction = ONE) -> Envelope:
    """Upper envelope of the lines ``alpha*slopes[a] - costs[a]`` over [lo, hi].

    At a crossing the steeper line wins.  Among parallel lines only the
    cheapest survives (lowest index on exact duplicates).  The part of
    the envelope below zero is clipped away.
    """
    lines = sorted(((Fraction(s), Fraction(c), i) for i, (s, c) in enumerate(zip(slopes, costs))),
                   key=lambda l: (l[0], -l[1], -l[2]))
    hull: List[tuple] = []
    for line in lines:
        if hull and hull[-1][0] == line[0]:
            hull.pop()
        while len(hull) >= 2 and _crossing(hull[-2], line) <= _crossing(hull[-2], hull[-1]):
            hull.pop()
        hull.append(line)

    starts = [None] + [_crossing(hull[k - 1], hull[k]) for k in range(1, len(hull))]
    segments = []
    for k, line in enumerate(hull):
        seg_lo = lo if starts[k] is None else max(starts[k], lo)
        seg_hi = hi if k + 1 == len(hull) else min(starts[k + 1], hi)
        last = k + 1 == len(hull) or starts[k + 1] > hi
        if seg_lo < seg_hi or (last and seg_lo == hi):
            segments.append([seg_lo, seg_hi, line])
        if last:
            break

    clipped = []
    for seg_lo, seg_hi, (slope, cost, idx) in segments:
        if slope * seg_hi - cost < 0:
            continue
        if slope * seg_lo - cost < 0:
            seg_lo = cost / slope
        clipped.append(Segment(seg_lo, seg_hi, idx))
    return Envelope(tuple(clipped))


def upper_envelope(instance: Instance) -> Envelope:
    """Envelope of the agent's utility lines under linear contracts."""
    instance.assumptions.require("A1", "A2", "A3")
    return line_envelope(instance.rewards, instance.costs)


def implemented_action(instance: Instance, alpha) -> Optional[int]:
    """Action implemented by the linear contract ``alpha`` (None if the agent opts out).

    Uses the envelope when A1-A3 hold, and the agent's best response
    otherwise.
    """
    alpha = Fraction(alpha)
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    if instance.assumptions.missing("A1", "A2", "A3"):
        return agent_best_response(instance, LinearContract(alpha)).choice
    return upper_envelope(instance).action_at(alpha)


def indifference_alpha(instance: Instance, low: int, high: int) -> Fraction:
    """The alpha at which the agent is indifferent between two actions."""
    r, c = instance.rewards, instance.costs
    return (c[high] - c[low]) / (r[high] - r[low])


def best_linear(instance: Instance) -> LinearResult:
    """Best linear contract; the search runs over envelope breakpoints only.

    Inside a segment the implemented action is fixed and ``(1-alpha)R``
    falls as alpha grows, so the left end of each segment dominates.
    """
    env = upper_envelope(instance)
    rewards = instance.rewards
    best = None
    for seg in env.segments:
        payoff = (1 - seg.lo) * rewards[seg.action]
        if best is None or payoff > best.payoff:
            best = LinearResult(seg.lo, seg.action, payoff)
    return best


def best_alpha_by_envelope(rewards: Sequence[Fraction], slopes: Sequence[Fraction],
                           costs: Sequence[Fraction]) -> LinearResult:
    """Best alpha in [0, 1] when the agent is paid ``alpha * slopes[a]`` in expectation.

    Candidates are the envelope breakpoints; each is scored with the
    tie-breaking best response, so no assumption on the lines is needed.
    """
    env = line_envelope(slopes, costs)
    best = LinearResult(ZERO, None, ZERO) if not env.segments else None
    for alpha in env.breakpoints:
        br = best_response_from_expectations(rewards, costs, [alpha * s for s in slopes])
        if best is None or br.principal_payoff > best.payoff:
            best = LinearResult(alpha, br.choice, br.principal_payoff)
    return best


def debt_contract(instance: Instance, cut: int, alpha) -> Contract:
    alpha = Fraction(alpha)
    return Contract([alpha * x if j >= cut else ZERO for j, x in enumerate(instance.outcomes)])


def best_debt(instance: Instance) -> DebtResult:
    """Best contract of the form ``t_j = alpha*x_j`` for ``j >= cut`` and 0 below.

    Every cut is tried; for each one the envelope of the lines
    ``alpha*E_a - c_a`` (E_a = expected reward above the cut) gives the
    candidate alphas.  ``cut == 0`` is the linear contract.
    """
    instance.assumptions.require("A1", "A2", "A3")
    rewards, costs = instance.rewards, instance.costs
    best = None
    for cut in range(instance.m):
        slopes = [sum((a.probs[j] * instance.outcomes[j] for j in range(cut, instance.m)), ZERO)
                  for a in instance.actions]
        res = best_alpha_by_envelope(rewards, slopes, costs)
        if best is None or res.payoff > best.payoff:
            best = DebtResult(cut, res.alpha, res.action, res.payoff)
    return best


def _best_over_lps(instance: Instance, solver) -> ContractResult:
    rewards = instance.rewards
    best = None
    for a in range(instance.n):
        res = solver(instance, a)
        if isinstance(res, DualCertificate):
            continue
        payoff = rewards[a] - expected_payment(instance, a, res)
        if best is None or payoff > best[2]:
            best = (a, res, payoff)
    if best is None:
        raise NoImplementableAction("no action is implementable")
    _, contract, payoff = best
    if payoff < 0:
        # without a free action the principal may prefer that nobody is hired
        zero = Contract.zero(instance.m)
        if agent_best_response(instance, zero).opted_out:
            return ContractResult(None, zero, ZERO)
    # the tie-break may hand the win to an equally good action with a lower index
    br = agent_best_response(instance, contract)
    if br.principal_payoff != payoff:
        raise LpError("replayed best response disagrees with the LP payoff")
    return ContractResult(br.choice, contract, payoff)


def optimal_contract(instance: Instance) -> ContractResult:
    """Optimal contract: one minimum-payment LP per action, best payoff wins."""
    return _best_over_lps(instance, min_payment_contract)


def best_monotone(instance: Instance) -> ContractResult:
    """Best contract with payments nondecreasing in the outcome."""
    return _best_over_lps(instance, min_payment_monotone)


# ---------------------------------------------------------------------------
# Regularity


def _ratio_key(num: Fraction, den: Fraction):
    # num/den with x/0 = +inf for x > 0; callers skip 0/0
    return (1, ZERO) if den == 0 else (0, num / den)


def likelihood_ratio_increasing(f: Sequence[Fraction], g: Sequence[Fraction]) -> bool:
    """Whether f_j/g_j is nondecreasing in j, skipping positions where both vanish."""
    keys = [_ratio_key(fj, gj) for fj, gj in zip(f, g) if fj != 0 or gj != 0]
    return all(a <= b for a, b in zip(keys, keys[1:]))


def mlrp_check(instance: Instance) -> bool:
    """Monotone likelihood ratio property over every pair with c_a < c_a'."""
    acts = instance.actions
    for a in acts:
        for b in acts:
            if a.cost < b.cost and not likelihood_ratio_increasing(b.probs, a.probs):
                return False
    return True


def fosd_check(f: Sequence[Fraction], g: Sequence[Fraction]) -> bool:
    """True iff f first-order stochastically dominates g."""
    if len(f) != len(g):
        raise LengthMismatch("distributions have different lengths")
    cf = cg = ZERO
    for fj, gj in zip(f, g):
        cf += fj
        cg += gj
        if cf > cg:
            return False
    return True


class CdfpViolation(NamedTuple):
    low: int
    action: int
    high: int
    lam: Fraction


def _mix(lam, f, g):
    return [lam * a + (1 - lam) * b for a, b in zip(f, g)]


def cdfp_check(instance: Instance, action_index: int) -> Tuple[bool, Optional[CdfpViolation]]:
    """Concavity-of-distribution-function check for one action.

    For each pair bracketing the action's cost, the action must dominate
    the cost-matched mixture.  Pairs with equal cost to the action on both
    sides are checked at both endpoints of the mixing weight.
    """
    acts = instance.actions
    ca = acts[action_index].cost
    fa = acts[action_index].probs
    others = [k for k in range(instance.n) if k != action_index]
    for lo in others:
        for hi in others:
            if lo == hi:
                continue
            c_lo, c_hi = acts[lo].cost, acts[hi].cost
            if not (c_lo <= ca <= c_hi):
                continue
            if c_lo != c_hi:
                lams = [(c_hi - ca) / (c_hi - c_lo)]
            else:
                lams = [ZERO, ONE]
            for lam in lams:
                if not fosd_check(fa, _mix(lam, acts[lo].probs, acts[hi].probs)):
                    return False, CdfpViolation(lo, action_index, hi, lam)
    return True, None


@dataclass(frozen=True)
class RegularityReport:
    mlrp: bool
    fosd_pairs: tuple  # fosd_pairs[a][b]: does F_a dominate F_b
    cdfp: bool
    cdfp_violation: Optional[CdfpViolation]


def regularity_report(instance: Instance) -> RegularityReport:
    acts = instance.actions
    fosd = tuple(tuple(fosd_check(a.probs, b.probs) for b in acts) for a in acts)
    violation = None
    for i in range(instance.n):
        ok, witness = cdfp_check(instance, i)
        if not ok:
            violation = witness
            break
    return RegularityReport(mlrp_check(instance), fosd, violation is None, violation)


# ---------------------------------------------------------------------------
# Single-payment contracts


def single_payment_contract(instance: Instance) -> Contract:
    """Cheapest contract for the highest-cost action, paying only at the top outcome.

    Requires MLRP, a unique highest-cost action, and that action being
    implementable.  The payment is the largest ratio
    ``(c_n - c_i) / (F_{n,m} - F_{i,m})`` over the other actions.
    """
    if not mlrp_check(instance):
        raise PreconditionFailed("MLRP does not hold")
    costs = instance.costs
    top_cost = max(costs)
    if costs.count(top_cost) != 1:
        raise PreconditionFailed("the highest-cost action is not unique")
    contract = top_payment_for(instance, costs.index(top_cost))
    if contract is None:
        raise PreconditionFailed("highest-cost action is not implementable")
    return contract


def top_payment_for(instance: Instance, action_index: int) -> Optional[Contract]:
    """Cheapest contract paying only at the top outcome that keeps the action IC and IR."""
    acts = instance.actions
    target = acts[action_index]
    f = target.probs[-1]
    lower, upper = ZERO, None
    for k, other in enumerate(acts):
        if k == action_index:
            continue
        gap = f - other.probs[-1]
        need = target.cost - other.cost
        if gap > 0:
            lower = max(lower, need / gap)
        elif gap < 0:
            bound = need / gap
            upper = bound if upper is None else min(upper, bound)
        elif need > 0:
            return None
    if target.cost > 0:
        if f == 0:
            return None
        lower = max(lower, target.cost / f)
    if upper is not None and lower > upper:
        return None
    return Contract([ZERO] * (instance.m - 1) + [lower])


def single_payment_search(instance: Instance) -> ContractResult:
    """Best contract among those paying only for the highest outcome."""
    best = None
    for a in range(instance.n):
        contract = top_payment_for(instance, a)
        if contract is None:
            continue
        br = agent_best_response(instance, contract)
        if br.choice is None:
            continue
        if best is None or br.principal_payoff > best.payoff:
            best = ContractResult(br.choice, contract, br.principal_payoff)
    if best is None:
        raise NoImplementableAction("no action is implementable with a top-outcome payment")
    return best


def two_action_optimal(instance: Instance) -> ContractResult:
    """Closed-form optimum for two actions where the first is free.

    Either pay nothing (the free action), or pay ``c_2/(F_2j - F_1j)`` at
    the outcome maximizing the likelihood ratio F_2j/F_1j.
    """
    if instance.n != 2 or instance.actions[0].cost != 0:
        raise PreconditionFailed("needs exactly two actions with c_1 = 0")
    f1, f2 = instance.actions[0].probs, instance.actions[1].probs
    c2 = instance.actions[1].cost
    zero = Contract.zero(instance.m)
    candidates = [zero]
    best_j = None
    for j in range(instance.m):
        if f2[j] == 0:
            continue
        if best_j is None or _ratio_key(f2[j], f1[j]) > _ratio_key(f2[best_j], f1[best_j]):
            best_j = j
    if best_j is not None and f2[best_j] > f1[best_j]:
        payments = [ZERO] * instance.m
        payments[best_j] = c2 / (f2[best_j] - f1[best_j])
        candidates.append(Contract(payments))
    best = None
    for contract in candidates:
        br = agent_best_response(instance, contract)
        if best is None or br.principal_payoff > best.payoff:
            best = ContractResult(br.choice, contract, br.principal_payoff)
    return best


def linear_payoff(instance: Instance, alpha) -> Fraction:
    return principal_payoff(instance, LinearContract(alpha))
