"""Principal-agent instances, contracts and the agent's best response.

Every numeric quantity is a :class:`fractions.Fraction`.  Nothing in this
module rounds; decimal rendering happens only at the I/O boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

Rational = Fraction

__all__ = [
    "Rational",
    "ContractError",
    "MalformedInstance",
    "AssumptionViolated",
    "PreconditionFailed",
    "Action",
    "Assumptions",
    "Instance",
    "Contract",
    "LinearContract",
    "AffineContract",
    "BestResponse",
    "to_rational",
    "build_instance",
    "expected_reward",
    "expected_payment",
    "payments_of",
    "best_response_from_expectations",
    "agent_best_response",
    "principal_payoff",
    "welfare",
]


class ContractError(Exception):
    """Base class for errors raised by this package."""


class MalformedInstance(ContractError, ValueError):
    pass


class AssumptionViolated(ContractError):
    """An operation needs one of the standing assumptions A1-A4."""

    def __init__(self, *names: str):
        self.names = names
        super().__init__("assumption(s) violated: " + ", ".join(names))


class PreconditionFailed(ContractError):
    pass


def to_rational(value) -> Fraction:
    """Convert ints, Fractions and numeric strings ("3/8", "1.1") exactly.

    Binary floats are rejected: they cannot be converted without guessing
    what the author meant.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise MalformedInstance(f"not a rational literal: {value!r}") from exc
    if isinstance(value, float):
        raise TypeError("floats are not accepted; pass a string such as '0.1'")
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


@dataclass(frozen=True)
class Action:
    probs: tuple
    cost: Fraction

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(to_rational(p) for p in self.probs))
        object.__setattr__(self, "cost", to_rational(self.cost))
        if any(p < 0 for p in self.probs):
            raise MalformedInstance("negative probability")
        if sum(self.probs) != 1:
            raise MalformedInstance(f"probabilities sum to {sum(self.probs)}, not 1")
        if self.cost < 0:
            raise MalformedInstance("negative cost")


@dataclass(frozen=True)
class Assumptions:
    A1: bool  # no dominated actions
    A2: bool  # unique welfare maximizer
    A3: bool  # some zero-cost action
    A4: bool  # lowest outcome is 0

    def missing(self, *names: str) -> list:
        return [name for name in names if not getattr(self, name)]

    def require(self, *names: str) -> None:
        missing = self.missing(*names)
        if missing:
            raise AssumptionViolated(*missing)


@dataclass(frozen=True)
class Instance:
    outcomes: tuple
    actions: tuple
    assumptions: Assumptions = field(compare=False)

    @property
    def n(self) -> int:
        return len(self.actions)

    @property
    def m(self) -> int:
        return len(self.outcomes)

    @cached_property
    def rewards(self) -> tuple:
        return tuple(expected_reward(self, i) for i in range(self.n))

    @cached_property
    def costs(self) -> tuple:
        return tuple(a.cost for a in self.actions)

    def probs(self, i: int) -> tuple:
        return self.actions[i].probs


@dataclass(frozen=True)
class Contract:
    payments: tuple

    def __post_init__(self):
        object.__setattr__(self, "payments", tuple(to_rational(t) for t in self.payments))
        if any(t < 0 for t in self.payments):
            raise ValueError("limited liability: payments must be nonnegative")

    def is_monotone(self) -> bool:
        return all(a <= b for a, b in zip(self.payments, self.payments[1:]))

    def positive_count(self) -> int:
        return sum(1 for t in self.payments if t > 0)

    @classmethod
    def zero(cls, m: int) -> "Contract":
        return cls((Fraction(0),) * m)


@dataclass(frozen=True)
class LinearContract:
    alpha: Fraction

    def __post_init__(self):
        object.__setattr__(self, "alpha", to_rational(self.alpha))
        if not 0 <= self.alpha <= 1:
            raise ValueError("linear contract parameter must lie in [0, 1]")

    def payments(self, outcomes: Sequence[Fraction]) -> tuple:
        return tuple(self.alpha * x for x in outcomes)


@dataclass(frozen=True)
class AffineContract:
    alpha0: Fraction
    alpha1: Fraction

    def __post_init__(self):
        object.__setattr__(self, "alpha0", to_rational(self.alpha0))
        object.__setattr__(self, "alpha1", to_rational(self.alpha1))
        if self.alpha0 < 0 or self.alpha1 < 0:
            raise ValueError("affine contract parameters must be nonnegative")

    def payments(self, outcomes: Sequence[Fraction]) -> tuple:
        return tuple(self.alpha0 + self.alpha1 * x for x in outcomes)

    def expected_payment(self, reward: Fraction) -> Fraction:
        # Affine payments depend on the distribution only through its mean.
        return self.alpha0 + self.alpha1 * reward


AnyContract = Union[Contract, LinearContract, AffineContract, Sequence]


@dataclass(frozen=True)
class BestResponse:
    """The agent's choice; ``choice is None`` means the agent opts out."""

    choice: Optional[int]
    agent_utility: Fraction
    principal_payoff: Fraction

    @property
    def opted_out(self) -> bool:
        return self.choice is None


def _assumption_flags(outcomes, actions) -> Assumptions:
    rewards = [sum(p * x for p, x in zip(a.probs, outcomes)) for a in actions]
    costs = [a.cost for a in actions]
    n = len(actions)
    a1 = True
    for i in range(n):
        for k in range(i + 1, n):
            if rewards[i] == rewards[k]:
                a1 = False
            elif (rewards[i] > rewards[k]) != (costs[i] > costs[k]):
                a1 = False
    welfares = [r - c for r, c in zip(rewards, costs)]
    a2 = welfares.count(max(welfares)) == 1
    a3 = any(c == 0 for c in costs)
    a4 = outcomes[0] == 0
    return Assumptions(A1=a1, A2=a2, A3=a3, A4=a4)


def build_instance(outcomes: Iterable, actions: Iterable, *, require_support: bool = True) -> Instance:
    """Validate raw data and return an :class:`Instance`.

    ``actions`` is an iterable of ``(probs, cost)`` pairs or :class:`Action`
    objects.  Unsorted outcomes are sorted, with every probability vector
    permuted alongside.  ``require_support=False`` admits outcomes that no
    action reaches (used for degenerate limit cases).
    """
    xs = [to_rational(x) for x in outcomes]
    if not xs:
        raise MalformedInstance("need at least one outcome")
    if any(x < 0 for x in xs):
        raise MalformedInstance("outcomes must be nonnegative")
    parsed = []
    for a in actions:
        if isinstance(a, Action):
            parsed.append(a)
            continue
        probs, cost = a
        probs = [to_rational(p) for p in probs]
        if len(probs) != len(xs):
            raise MalformedInstance(f"action has {len(probs)} probabilities for {len(xs)} outcomes")
        parsed.append((probs, cost))
    if not parsed:
        raise MalformedInstance("need at least one action")

    order = sorted(range(len(xs)), key=lambda j: xs[j])
    xs = tuple(xs[j] for j in order)
    built = []
    for a in parsed:
        if isinstance(a, Action):
            if len(a.probs) != len(xs):
                raise MalformedInstance("probability vector length does not match outcomes")
            probs, cost = a.probs, a.cost
        else:
            probs, cost = a
        built.append(Action(tuple(probs[j] for j in order), cost))

    if require_support:
        for j in range(len(xs)):
            if all(a.probs[j] == 0 for a in built):
                raise MalformedInstance(f"outcome {j} is reached by no action")
    return Instance(xs, tuple(built), _assumption_flags(xs, built))


def expected_reward(instance: Instance, action_index: int) -> Fraction:
    probs = instance.actions[action_index].probs
    return sum((p * x for p, x in zip(probs, instance.outcomes)), Fraction(0))


def payments_of(instance: Instance, contract: AnyContract) -> tuple:
    """Per-outcome payments of any supported contract form."""
    if isinstance(contract, Contract):
        payments = contract.payments
    elif isinstance(contract, (LinearContract, AffineContract)):
        payments = contract.payments(instance.outcomes)
    else:
        payments = Contract(contract).payments
    if len(payments) != instance.m:
        raise ValueError(f"contract has {len(payments)} payments for {instance.m} outcomes")
    return payments


def expected_payment(instance: Instance, action_index: int, contract: AnyContract) -> Fraction:
    payments = payments_of(instance, contract)
    probs = instance.actions[action_index].probs
    return sum((p * t for p, t in zip(probs, payments)), Fraction(0))


def best_response_from_expectations(rewards: Sequence[Fraction], costs: Sequence[Fraction],
                                    payments: Sequence[Fraction]) -> BestResponse:
    """Best response when only (R_a, c_a, T_a) per action matter.

    Ties in agent utility go to the larger principal payoff, then to the
    lowest index.  The agent opts out when every utility is negative.
    """
    best = None
    for i, (r, c, t) in enumerate(zip(rewards, costs, payments)):
        key = (t - c, r - t)
        if best is None or key > best[0]:
            best = (key, i)
    (utility, payoff), choice = best
    if utility < 0:
        return BestResponse(None, Fraction(0), Fraction(0))
    return BestResponse(choice, utility, payoff)


def agent_best_response(instance: Instance, contract: AnyContract) -> BestResponse:
    payments = payments_of(instance, contract)
    expected = [sum((p * t for p, t in zip(a.probs, payments)), Fraction(0)) for a in instance.actions]
    return best_response_from_expectations(instance.rewards, instance.costs, expected)


def principal_payoff(instance: Instance, contract: AnyContract) -> Fraction:
    """Principal's expected payoff; an agent who opts out leaves her 0."""
    return agent_best_response(instance, contract).principal_payoff


def welfare(instance: Instance, action_index: int) -> Fraction:
    return expected_reward(instance, action_index) - instance.actions[action_index].cost
