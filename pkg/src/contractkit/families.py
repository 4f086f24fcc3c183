"""Instance generators and the approximation-ratio audit.

The parametric families are the standard lower-bound constructions for
linear contracts: a diagonal family where every action is implementable
and linear contracts earn only 1, a three-outcome variant that keeps MLRP,
and a four-outcome variant that also defeats monotone contracts.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .core import ContractError, Instance, build_instance, to_rational
from .contracts import best_linear, best_monotone, optimal_contract, upper_envelope

ZERO = Fraction(0)
ONE = Fraction(1)


class BadParams(ContractError, ValueError):
    pass


class UnknownName(ContractError, KeyError):
    pass


def _rat(value, name) -> Fraction:
    try:
        return to_rational(value)
    except (TypeError, ValueError) as exc:
        raise BadParams(f"{name}: {exc}") from exc


def _eps_open(eps, name="eps") -> Fraction:
    eps = _rat(eps, name)
    if not 0 < eps < 1:
        raise BadParams(f"{name} must lie strictly between 0 and 1")
    return eps


def ladder_reward(i: int, eps: Fraction) -> Fraction:
    """R_i = eps^-(i-1) for 1-based i."""
    return 1 / eps ** (i - 1)


def ladder_cost(i: int, eps: Fraction) -> Fraction:
    """Cost making welfare i - eps(i-1) and every action linearly implementable."""
    return 1 / eps ** (i - 1) - i + eps * (i - 1)


def gen_thm52(n: int, eps) -> Instance:
    """Diagonal instance: action i lands on outcome eps^-(i-1) for sure."""
    if n < 1:
        raise BadParams("n must be at least 1")
    eps = _eps_open(eps)
    outcomes = [ladder_reward(i, eps) for i in range(1, n + 1)]
    actions = []
    for i in range(1, n + 1):
        probs = [ZERO] * n
        probs[i - 1] = ONE
        actions.append((probs, ladder_cost(i, eps)))
    return build_instance(outcomes, actions)


def gen_appendixE(n: int, eps, delta, *, allow_zero_delta: bool = False) -> Instance:
    """Three-outcome version of the diagonal family; MLRP holds.

    Outcomes are (0, R_n, R_n + 1).  Action i < n puts R_i/R_n on the
    middle outcome; the top action moves mass ``delta`` to the last one.
    ``allow_zero_delta`` admits the degenerate delta = 0 limit.
    """
    if n < 2:
        raise BadParams("n must be at least 2")
    eps = _eps_open(eps)
    delta = _rat(delta, "delta")
    if not (0 < delta < 1 or (allow_zero_delta and delta == 0)):
        raise BadParams("delta must lie strictly between 0 and 1")
    top = ladder_reward(n, eps)
    actions = []
    for i in range(1, n):
        share = ladder_reward(i, eps) / top
        actions.append(([1 - share, share, ZERO], ladder_cost(i, eps)))
    actions.append(([ZERO, 1 - delta, delta], ladder_cost(n, eps)))
    return build_instance([ZERO, top, top + 1], actions, require_support=delta > 0)


def gen_appendixF(n: int, eps, delta, gamma) -> Instance:
    """Four-outcome instance on which monotone contracts also lose a factor near n - 1."""
    if n < 3:
        raise BadParams("n must be at least 3")
    eps = _eps_open(eps)
    delta = _rat(delta, "delta")
    gamma = _rat(gamma, "gamma")
    if not 0 < delta < eps:
        raise BadParams("need 0 < delta < eps")
    if gamma <= 0:
        raise BadParams("gamma must be positive")
    x2 = 1 / eps ** (n - 2)
    outcomes = [ZERO, x2, x2 + gamma, x2 + 2 * gamma]
    actions = []
    for i in range(1, n - 1):
        mass = eps ** (n - i - 1)
        actions.append(([1 - mass, mass, ZERO, ZERO], ladder_cost(i, eps)))
    actions.append(([ZERO, 1 - delta, delta, ZERO], ladder_cost(n - 1, eps)))
    actions.append(([ZERO, ZERO, ZERO, ONE], x2))
    return build_instance(outcomes, actions)


EXAMPLES = {
    "example11": (
        ["1", "1.1", "4.9", "5", "5.1", "5.2"],
        [
            (["3/8", "3/8", "1/4", 0, 0, 0], 0),
            ([0, "3/8", "3/8", "1/4", 0, 0], 1),
            ([0, 0, "3/8", "3/8", "1/4", 0], 2),
            ([0, 0, 0, "3/8", "3/8", "1/4"], "2.2"),
        ],
    ),
    "example12": (
        [1, 3],
        [([1, 0], 0), ([0, 1], "4/3")],
    ),
    "exampleD5": (
        [0, 1, 2],
        [(["1/3", "1/3", "1/3"], 0), (["1/3", "1/6", "1/2"], 1)],
    ),
}


def gen_example(name: str) -> Instance:
    try:
        outcomes, actions = EXAMPLES[name]
    except KeyError:
        raise UnknownName(name) from None
    return build_instance(outcomes, actions)


def _spread(weights: List[Fraction]) -> List[Fraction]:
    """Sort and push repeated weights apart by the smallest step that separates them."""
    ws = sorted(weights)
    step = Fraction(1, 1000)
    for i in range(1, len(ws)):
        if ws[i] <= ws[i - 1]:
            ws[i] = ws[i - 1] + step
    if ws and ws[-1] > 1:
        ws = [w / ws[-1] for w in ws]
    return ws


def gen_random_spanning(n: int, m: int, seed: int, weights: Optional[Sequence] = None,
                        increasing_welfare: bool = False) -> Instance:
    """Random instance whose actions interpolate two MLR-ordered distributions.

    ``G`` has random positive weights and ``H`` tilts it by a strictly
    increasing likelihood ratio.  Action i plays ``(1-w_i) G + w_i H``
    with increasing weights and increasing costs, so MLRP holds.  Repeated
    weights are separated and welfare ties broken by small cost shifts,
    keeping A1 and A2.  ``increasing_welfare`` keeps every cost step below
    the matching reward step.
    """
    if n < 2 or m < 2:
        raise BadParams("need n >= 2 and m >= 2")
    rng = random.Random(seed)
    outcomes = sorted(rng.sample(range(1, max(31, 2 * m + 1)), m))
    g = [rng.randint(1, 9) for _ in range(m)]
    ratios = sorted(rng.sample(range(1, max(20, 2 * m + 1)), m))
    G = [Fraction(v, sum(g)) for v in g]
    tilt = [gj * r for gj, r in zip(g, ratios)]
    H = [Fraction(v, sum(tilt)) for v in tilt]
    if weights is None:
        ws = [ZERO] + sorted(Fraction(v, 20) for v in rng.sample(range(1, 21), n - 1))
    else:
        if len(weights) != n:
            raise BadParams("need one weight per action")
        ws = [_rat(w, "weight") for w in weights]
        if any(not 0 <= w <= 1 for w in ws):
            raise BadParams("weights must lie in [0, 1]")
    ws = _spread(ws)
    dists = [[(1 - w) * a + w * b for a, b in zip(G, H)] for w in ws]
    rewards = [sum(p * x for p, x in zip(d, outcomes)) for d in dists]
    costs = [ZERO]
    for i in range(1, n):
        # markup factor in (0, 2), never exactly 1 so neighbours never tie on welfare
        top = 20 if increasing_welfare else 40
        u = Fraction(rng.choice([k for k in range(1, top) if k != 20]), 20)
        costs.append(costs[-1] + u * (rewards[i] - rewards[i - 1]))
    shift = Fraction(1, 1000)
    while True:
        welfares = [r - c for r, c in zip(rewards, costs)]
        top = max(welfares)
        tied = [i for i, w in enumerate(welfares) if w == top]
        if len(tied) == 1:
            break
        costs = [c + shift if i >= tied[1] else c for i, c in enumerate(costs)]
        shift /= 2
    return build_instance(outcomes, list(zip(dists, costs)))


def random_corpus(count: int, seed: int = 0, n_range=(2, 6), m_range=(2, 6)) -> List[Tuple[str, Instance]]:
    """Seeded list of ``(name, instance)`` random-spanning instances."""
    rng = random.Random(seed)
    out = []
    for idx in range(count):
        n = rng.randint(*n_range)
        m = rng.randint(*m_range)
        inst_seed = rng.randrange(2 ** 31)
        out.append((f"spanning-{seed}-{idx}", gen_random_spanning(n, m, inst_seed)))
    return out


def bucket_count(values: Sequence[Fraction]) -> Tuple[int, Optional[Fraction]]:
    """Number of nonempty doubling buckets [1,2), [2,4), ... after dividing by the minimum.

    Returns ``(count, normalizer)``; zero values are ignored.
    """
    positive = [Fraction(v) for v in values if v > 0]
    if not positive:
        return 0, None
    low = min(positive)
    buckets = set()
    for v in positive:
        q = v / low
        buckets.add((q.numerator // q.denominator).bit_length() - 1)
    return len(buckets), low


@dataclass(frozen=True)
class AuditReport:
    n: int
    m: int
    opt: Fraction
    opt_action: int
    opt_positive: int
    monotone: Fraction
    linear: Optional[Fraction] = None
    linear_alpha: Optional[Fraction] = None
    N: Optional[int] = None
    K: Optional[int] = None
    L: Optional[int] = None
    H: Optional[Fraction] = None
    C: Optional[Fraction] = None
    reward_scale: Optional[Fraction] = None
    cost_scale: Optional[Fraction] = None
    top_welfare: Optional[Fraction] = None
    le_N: Optional[bool] = None
    le_2K: Optional[bool] = None
    le_4L: Optional[bool] = None
    le_4L_all: Optional[bool] = None  # counts the zero-cost action as one more bucket
    le_welfare: Optional[bool] = None
    sparse_ok: Optional[bool] = None

    @property
    def rho(self) -> Optional[Fraction]:
        if self.linear is None or self.linear <= 0:
            return None
        return self.opt / self.linear

    @property
    def restricted(self) -> bool:
        return self.linear is None

    @property
    def bounds(self) -> dict:
        return {"le_N": self.le_N, "le_2K": self.le_2K, "le_4L": self.le_4L,
                "le_welfare": self.le_welfare, "sparse_ok": self.sparse_ok}

    @property
    def ok(self) -> bool:
        return all(v is not False for v in self.bounds.values()) and self.le_4L_all is not False


def audit_ratio(instance: Instance) -> AuditReport:
    """Compare the optimal contract with the best linear and monotone ones.

    Bucket counts use the linearly implementable actions, normalized by
    their smallest positive reward (K) or smallest positive cost (L).
    Without A1-A3 only the optimal and monotone payoffs are reported.
    """
    opt = optimal_contract(instance)
    mono = best_monotone(instance)
    base = dict(n=instance.n, m=instance.m, opt=opt.payoff, opt_action=opt.action,
                opt_positive=opt.contract.positive_count(), monotone=mono.payoff)
    if instance.assumptions.missing("A1", "A2", "A3"):
        return AuditReport(**base)
    lin = best_linear(instance)
    env = upper_envelope(instance)
    implementable = env.implementable
    rewards = [instance.rewards[i] for i in implementable]
    costs = [instance.costs[i] for i in implementable]
    K, r_scale = bucket_count(rewards)
    L, c_scale = bucket_count(costs)
    top = implementable[-1]
    top_welfare = instance.rewards[top] - instance.costs[top]
    alg = lin.payoff
    positive_r = [r for r in rewards if r > 0]
    positive_c = [c for c in costs if c > 0]
    return AuditReport(
        **base,
        linear=alg,
        linear_alpha=lin.alpha,
        N=env.N,
        K=K,
        L=L,
        H=max(positive_r) / r_scale if positive_r else None,
        C=max(positive_c) / c_scale if positive_c else None,
        reward_scale=r_scale,
        cost_scale=c_scale,
        top_welfare=top_welfare,
        le_N=opt.payoff <= env.N * alg,
        le_2K=opt.payoff <= 2 * K * alg,
        le_4L=True if L == 0 else opt.payoff <= 4 * L * alg,
        le_4L_all=opt.payoff <= 4 * (L + 1) * alg,
        le_welfare=opt.payoff <= top_welfare,
        sparse_ok=opt.contract.positive_count() <= instance.n - 1,
    )
