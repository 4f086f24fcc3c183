"""Contracts for actions known only through their expected reward and cost.

When the principal knows ``(R_a, c_a)`` but not the outcome distribution,
nature picks any distribution with mean ``R_a``.  A linear contract's
expected payment ``alpha * R_a`` ignores that choice, so its payoff is
the same in every case.  This module evaluates other contracts against an
adversary that plays two-point distributions, and rebuilds the
affine-contract reduction that shows linear contracts cannot be beaten.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .core import (
    AffineContract,
    Contract,
    ContractError,
    best_response_from_expectations,
    to_rational,
)
from .contracts import LinearResult, best_alpha_by_envelope

ZERO = Fraction(0)
ONE = Fraction(1)

DEFAULT_CAP = 100_000


class NotAmbiguous(ContractError, ValueError):
    pass


class SizeLimit(ContractError):
    pass


class ConstructionFailed(ContractError):
    """The affine reduction did not produce the inequality it promises."""


@dataclass(frozen=True)
class AmbiguousInstance:
    outcomes: tuple
    actions: tuple  # ((reward, cost), ...)

    @property
    def n(self) -> int:
        return len(self.actions)

    @property
    def m(self) -> int:
        return len(self.outcomes)

    @property
    def rewards(self) -> tuple:
        return tuple(r for r, _ in self.actions)

    @property
    def costs(self) -> tuple:
        return tuple(c for _, c in self.actions)

    @property
    def has_free_action(self) -> bool:
        return any(c == 0 for c in self.costs)


def check_ambiguous(outcomes: Iterable, actions: Iterable) -> AmbiguousInstance:
    """Validate outcomes and ``(reward, cost)`` pairs.

    Outcomes must be distinct, start at 0 and number at least three;
    every reward must lie in ``[0, x_m]`` so that some distribution on the
    outcomes has that mean.
    """
    xs = sorted(to_rational(x) for x in outcomes)
    if len(xs) < 3:
        raise NotAmbiguous("need at least 3 outcomes")
    if len(set(xs)) != len(xs):
        raise NotAmbiguous("outcomes must be distinct")
    if xs[0] != 0:
        raise NotAmbiguous("lowest outcome must be 0")
    acts = []
    for r, c in actions:
        r, c = to_rational(r), to_rational(c)
        if not 0 <= r <= xs[-1]:
            raise NotAmbiguous(f"reward {r} outside [0, {xs[-1]}]")
        if c < 0:
            raise NotAmbiguous("negative cost")
        acts.append((r, c))
    if not acts:
        raise NotAmbiguous("need at least one action")
    return AmbiguousInstance(tuple(xs), tuple(acts))


class TwoPointDist(NamedTuple):
    """Mass ``1 - p_hi`` on outcome ``lo`` and ``p_hi`` on outcome ``hi``."""

    lo: int
    hi: int
    p_hi: Fraction

    def probs(self, m: int) -> tuple:
        vec = [ZERO] * m
        vec[self.lo] += 1 - self.p_hi
        vec[self.hi] += self.p_hi
        return tuple(vec)

    def mean(self, outcomes: Sequence[Fraction]) -> Fraction:
        return (1 - self.p_hi) * outcomes[self.lo] + self.p_hi * outcomes[self.hi]

    def payment(self, payments: Sequence[Fraction]) -> Fraction:
        return (1 - self.p_hi) * payments[self.lo] + self.p_hi * payments[self.hi]


def two_point(outcomes: Sequence[Fraction], lo: int, hi: int, mean: Fraction) -> TwoPointDist:
    """The distribution on ``{x_lo, x_hi}`` with the given mean."""
    x_lo, x_hi = outcomes[lo], outcomes[hi]
    if lo == hi:
        if x_lo != mean:
            raise ValueError("point mass does not have the requested mean")
        return TwoPointDist(lo, hi, ZERO)
    if not x_lo <= mean <= x_hi:
        raise ValueError("mean outside the support")
    return TwoPointDist(lo, hi, (mean - x_lo) / (x_hi - x_lo))


def chord(xa, ta, xb, tb) -> Tuple[Fraction, Fraction]:
    """(intercept, slope) of the line through two points."""
    slope = (tb - ta) / (xb - xa)
    return ta - slope * xa, slope


class AdversaryOutcome(NamedTuple):
    payoff: Fraction
    distributions: tuple  # one TwoPointDist per action
    best_response: Optional[int]


def _menu(amb: AmbiguousInstance, reward: Fraction, payments, allowed) -> List[TwoPointDist]:
    xs = amb.outcomes
    seen, menu = set(), []
    for lo in range(amb.m):
        for hi in range(lo, amb.m):
            if allowed is not None and (lo, hi) not in allowed:
                continue
            if lo == hi and xs[lo] != reward:
                continue
            if not xs[lo] <= reward <= xs[hi]:
                continue
            dist = two_point(xs, lo, hi, reward)
            pay = dist.payment(payments)
            if pay not in seen:  # only the expected payment matters to either party
                seen.add(pay)
                menu.append(dist)
    return menu


def two_point_adversary(amb: AmbiguousInstance, contract, cap: int = DEFAULT_CAP,
                        allowed_pairs: Optional[Iterable[Tuple[int, int]]] = None) -> AdversaryOutcome:
    """Worst payoff of ``contract`` over two-point distributions with the right means.

    Every combination of per-action supports ``{x_j, x_k}`` with
    ``x_j <= R_a <= x_k`` is tried.  The result bounds the true worst case
    from above.  ``allowed_pairs`` restricts the supports on offer.
    """
    payments = contract.payments if isinstance(contract, Contract) else Contract(contract).payments
    if len(payments) != amb.m:
        raise ValueError(f"contract has {len(payments)} payments for {amb.m} outcomes")
    allowed = None if allowed_pairs is None else set(allowed_pairs)
    menus = [_menu(amb, r, payments, allowed) for r in amb.rewards]
    if any(not menu for menu in menus):
        raise ValueError("some action has no admissible support")
    total = 1
    for menu in menus:
        total *= len(menu)
    if total > cap:
        raise SizeLimit(f"{total} support combinations exceed the cap of {cap}")
    worst = None
    for combo in itertools.product(*menus):
        expected = [d.payment(payments) for d in combo]
        br = best_response_from_expectations(amb.rewards, amb.costs, expected)
        if worst is None or br.principal_payoff < worst.payoff:
            worst = AdversaryOutcome(br.principal_payoff, tuple(combo), br.choice)
    return worst


def linear_worst_case(amb: AmbiguousInstance) -> LinearResult:
    """Best linear contract; its payoff does not depend on the distributions."""
    return best_alpha_by_envelope(amb.rewards, amb.rewards, amb.costs)


def payoff_under(amb: AmbiguousInstance, payments: Sequence[Fraction], dists: Sequence[TwoPointDist]):
    """Best response and payoff of a contract when nature plays ``dists``."""
    expected = [d.payment(payments) for d in dists]
    return best_response_from_expectations(amb.rewards, amb.costs, expected)


def affine_response(amb: AmbiguousInstance, alpha0, alpha1):
    """Best response to an affine contract; only the means matter."""
    return best_response_from_expectations(amb.rewards, amb.costs,
                                           [alpha0 + alpha1 * r for r in amb.rewards])


@dataclass(frozen=True)
class RobustConstruction:
    case: str  # "downward-slope" | "affine-input" | "above" | "below"
    pivot: Optional[int]
    l1: Optional[tuple]
    l2: Optional[tuple]
    l3: Optional[tuple]
    affine: AffineContract
    distributions: tuple
    contract_payoff: Fraction  # payoff of the input contract under ``distributions``
    affine_payoff: Fraction

    def trace(self) -> dict:
        return {
            "case": self.case,
            "pivot": self.pivot,
            "l1": self.l1,
            "l2": self.l2,
            "l3": self.l3,
            "alpha0": self.affine.alpha0,
            "alpha1": self.affine.alpha1,
            "distributions": [tuple(d) for d in self.distributions],
            "contract_payoff": self.contract_payoff,
            "affine_payoff": self.affine_payoff,
        }


def lemma42_construct(amb: AmbiguousInstance, contract) -> RobustConstruction:
    """Find distributions under which an affine contract does at least as well as ``contract``.

    The chord ``l1`` through the first and last payments defines the affine
    contract.  A decreasing chord falls back to paying nothing.  Otherwise a
    pivot outcome off the chord splits the outcomes into two more chords,
    and mixing extreme-point and pivot-based supports forces the contract
    to pay at least as much as the affine one for the same action.
    Requires a zero-cost action.
    """
    if not amb.has_free_action:
        raise NotAmbiguous("the reduction needs a zero-cost action")
    payments = contract.payments if isinstance(contract, Contract) else Contract(contract).payments
    if len(payments) != amb.m:
        raise ValueError(f"contract has {len(payments)} payments for {amb.m} outcomes")
    xs, m = amb.outcomes, amb.m
    last = m - 1
    extreme = tuple(two_point(xs, 0, last, r) for r in amb.rewards)
    t1, tm = payments[0], payments[last]

    pivot = l2 = l3 = None
    if t1 > tm:
        case, l1 = "downward-slope", None
        affine = AffineContract(0, 0)
        dists = extreme
    else:
        l1 = chord(xs[0], t1, xs[last], tm)
        affine = AffineContract(*l1)
        gaps = [payments[j] - (l1[0] + l1[1] * xs[j]) for j in range(1, last)]
        if all(g == 0 for g in gaps):
            case, dists = "affine-input", extreme
        else:
            best = max(range(len(gaps)), key=lambda k: (abs(gaps[k]), -k))
            pivot = best + 1
            l2 = chord(xs[0], t1, xs[pivot], payments[pivot])
            l3 = chord(xs[pivot], payments[pivot], xs[last], tm)
            via_pivot = tuple(two_point(xs, 0, pivot, r) if r <= xs[pivot]
                              else two_point(xs, pivot, last, r) for r in amb.rewards)
            chosen = affine_response(amb, *l1).choice
            if gaps[best] > 0:
                case = "above"
                dists = tuple(via_pivot[i] if i == chosen else extreme[i] for i in range(amb.n))
            else:
                case = "below"
                dists = tuple(extreme[i] if i == chosen else via_pivot[i] for i in range(amb.n))

    for d, r in zip(dists, amb.rewards):
        if d.mean(xs) != r:
            raise ConstructionFailed("emitted distribution has the wrong mean")
    contract_payoff = payoff_under(amb, payments, dists).principal_payoff
    affine_payoff = affine_response(amb, affine.alpha0, affine.alpha1).principal_payoff
    if affine_payoff < contract_payoff:
        raise ConstructionFailed(f"affine payoff {affine_payoff} below contract payoff {contract_payoff}")
    return RobustConstruction(case, pivot, l1, l2, l3, affine, dists, contract_payoff, affine_payoff)


def sample_contracts(amb: AmbiguousInstance, k: int, seed: int = 0) -> List[Contract]:
    """Deterministic mix of grid contracts and random rational contracts.

    Half come from the grid ``{0, x_m/4, x_m/2, x_m}^m`` (sampled without
    replacement when it is larger than needed), the rest have entries
    drawn from multiples of ``x_m/20`` in ``[0, 2 x_m]``.
    """
    rng = random.Random(seed)
    top = amb.outcomes[-1]
    levels = [ZERO, top / 4, top / 2, top]
    n_grid = (k + 1) // 2
    grid_size = len(levels) ** amb.m
    if grid_size <= n_grid:
        picks = range(grid_size)
    else:
        picks = sorted(rng.sample(range(grid_size), n_grid))
    out = []
    for code in picks:
        digits = []
        for _ in range(amb.m):
            code, d = divmod(code, len(levels))
            digits.append(levels[d])
        out.append(Contract(digits))
    while len(out) < k:
        out.append(Contract([top * Fraction(rng.randint(0, 40), 20) for _ in range(amb.m)]))
    return out[:k]


class SampleCheck(NamedTuple):
    contract: Contract
    adversary_payoff: Fraction
    construction: RobustConstruction
    linear_at_slope: Optional[Fraction]  # payoff of the linear contract alpha = alpha1
    ok: bool


@dataclass(frozen=True)
class RobustReport:
    linear: LinearResult
    samples: tuple

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.samples)


def verify_theorem_4_1(amb: AmbiguousInstance, contracts: Sequence, cap: int = DEFAULT_CAP) -> RobustReport:
    """Check that no sampled contract beats the best linear contract.

    Two routes per contract: the two-point adversary's payoff, and the
    affine construction followed by dropping the intercept (a linear
    contract with the same slope implements the same action and pays
    exactly ``alpha0`` less).
    """
    lin = linear_worst_case(amb)
    rows = []
    for contract in contracts:
        adv = two_point_adversary(amb, contract, cap=cap)
        ok = adv.payoff <= lin.payoff
        cons = None
        lin_slope = None
        if amb.has_free_action:
            cons = lemma42_construct(amb, contract)
            a0, a1 = cons.affine.alpha0, cons.affine.alpha1
            affine_br = affine_response(amb, a0, a1)
            slope_br = affine_response(amb, ZERO, a1)
            lin_slope = slope_br.principal_payoff
            ok = (ok and slope_br.choice == affine_br.choice
                  and lin_slope == affine_br.principal_payoff + a0
                  and cons.contract_payoff <= cons.affine_payoff <= lin_slope <= lin.payoff)
        rows.append(SampleCheck(contract if isinstance(contract, Contract) else Contract(contract),
                                adv.payoff, cons, lin_slope, ok))
    return RobustReport(lin, tuple(rows))
