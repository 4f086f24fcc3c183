"""Exact rational linear programming and the minimum-payment contract LPs.

:func:`solve_lp` is a dense two-phase tableau simplex over ``Fraction``
with Bland's pivoting rule.  Problems here have a handful of rows and
columns, so clarity wins over speed.  Every optimal solution carries its
dual vector and every infeasible one a Farkas vector; both can be checked
independently with :func:`check_certificate`.
"""

from __future__ import annotations

import contextvars
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .core import (
    AnyContract,
    Contract,
    ContractError,
    Instance,
    agent_best_response,
    expected_payment,
    payments_of,
)

ZERO = Fraction(0)

SENSES = ("<=", ">=", "=")


class DimensionMismatch(ContractError, ValueError):
    pass


class LpError(ContractError):
    """The solver produced something that failed its own re-verification."""


class NotOptimalInput(ContractError, ValueError):
    pass


@dataclass(frozen=True)
class LpProblem:
    """minimize ``c @ x`` subject to ``A[i] @ x (senses[i]) b[i]`` and ``x >= lb``."""

    c: tuple
    A: tuple
    senses: tuple
    b: tuple
    lb: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(Fraction(v) for v in self.c))
        object.__setattr__(self, "A", tuple(tuple(Fraction(v) for v in row) for row in self.A))
        object.__setattr__(self, "b", tuple(Fraction(v) for v in self.b))
        object.__setattr__(self, "senses", tuple(self.senses))
        lb = self.lb if self.lb is not None else (ZERO,) * len(self.c)
        object.__setattr__(self, "lb", tuple(Fraction(v) for v in lb))
        nv = len(self.c)
        if len(self.lb) != nv:
            raise DimensionMismatch("lower bounds do not match the number of variables")
        if not (len(self.A) == len(self.b) == len(self.senses)):
            raise DimensionMismatch("A, b and senses must have one entry per constraint")
        for row in self.A:
            if len(row) != nv:
                raise DimensionMismatch(f"constraint row of length {len(row)} for {nv} variables")
        for s in self.senses:
            if s not in SENSES:
                raise ValueError(f"unknown constraint sense {s!r}")

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return len(self.A)


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    values: Optional[tuple] = None
    objective: Optional[Fraction] = None
    basis: tuple = ()
    duals: Optional[tuple] = None
    farkas: Optional[tuple] = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


_solve_log: contextvars.ContextVar = contextvars.ContextVar("contractkit_lp_log", default=None)


@contextmanager
def record_solves():
    """Collect ``(problem, solution)`` for every LP solved inside the block."""
    log: List[Tuple[LpProblem, LpSolution]] = []
    token = _solve_log.set(log)
    try:
        yield log
    finally:
        _solve_log.reset(token)


class _Tableau:
    def __init__(self, rows, rhs, basis, n_cols):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.n_cols = n_cols
        self.cost = [ZERO] * n_cols
        self.d = [ZERO] * n_cols

    def set_cost(self, cost):
        self.cost = list(cost)
        d = list(cost)
        for i, bv in enumerate(self.basis):
            cb = cost[bv]
            if cb:
                row = self.rows[i]
                for j in range(self.n_cols):
                    if row[j]:
                        d[j] -= cb * row[j]
        self.d = d

    def value(self):
        return sum((self.cost[bv] * r for bv, r in zip(self.basis, self.rhs)), ZERO)

    def pivot(self, r, j):
        row = self.rows[r]
        piv = row[j]
        if piv != 1:
            row[:] = [v / piv for v in row]
            self.rhs[r] /= piv
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[j]
            if f:
                other[:] = [o - f * v if v else o for o, v in zip(other, row)]
                self.rhs[i] -= f * self.rhs[r]
        f = self.d[j]
        if f:
            self.d = [dk - f * v if v else dk for dk, v in zip(self.d, row)]
        self.basis[r] = j

    def run(self, allowed) -> str:
        """Bland's rule: lowest-index entering column, lowest-index leaving variable."""
        while True:
            entering = next((j for j in range(self.n_cols) if allowed[j] and self.d[j] < 0), None)
            if entering is None:
                return "optimal"
            best = None
            for i, row in enumerate(self.rows):
                a = row[entering]
                if a > 0:
                    key = (self.rhs[i] / a, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return "unbounded"
            self.pivot(best[1], entering)


def solve_lp(problem: LpProblem) -> LpSolution:
    """Solve ``problem`` exactly; see :class:`LpProblem` for the form."""
    solution = _solve(problem)
    log = _solve_log.get()
    if log is not None:
        log.append((problem, solution))
    return solution


def _solve(problem: LpProblem) -> LpSolution:
    nv, nr = problem.n_vars, problem.n_rows
    # shift x = x' + lb so that x' >= 0
    shifted = [bi - sum((a * l for a, l in zip(row, problem.lb)), ZERO)
               for row, bi in zip(problem.A, problem.b)]
    signs, senses, rows, rhs = [], [], [], []
    for row, bi, s in zip(problem.A, shifted, problem.senses):
        if bi < 0:
            signs.append(-1)
            rows.append([-v for v in row])
            rhs.append(-bi)
            s = {"<=": ">=", ">=": "<=", "=": "="}[s]
        else:
            signs.append(1)
            rows.append(list(row))
            rhs.append(bi)
        senses.append(s)

    n_cols = nv
    slack_col, art_col = [None] * nr, [None] * nr
    for i, s in enumerate(senses):
        if s != "=":
            slack_col[i] = n_cols
            n_cols += 1
    for i, s in enumerate(senses):
        if s != "<=":
            art_col[i] = n_cols
            n_cols += 1
    is_art = [False] * n_cols
    for i in range(nr):
        if art_col[i] is not None:
            is_art[art_col[i]] = True

    full_rows = []
    for i in range(nr):
        row = rows[i] + [ZERO] * (n_cols - nv)
        if slack_col[i] is not None:
            row[slack_col[i]] = Fraction(1 if senses[i] == "<=" else -1)
        if art_col[i] is not None:
            row[art_col[i]] = Fraction(1)
        full_rows.append(row)
    init_col = [slack_col[i] if senses[i] == "<=" else art_col[i] for i in range(nr)]
    tab = _Tableau(full_rows, rhs, list(init_col), n_cols)

    def row_multipliers():
        # y'_i = c_{init_i} - d_{init_i}; mapped back through the row flips
        return tuple(signs[i] * (tab.cost[init_col[i]] - tab.d[init_col[i]]) for i in range(nr))

    if any(is_art):
        tab.set_cost([Fraction(1) if is_art[j] else ZERO for j in range(n_cols)])
        tab.run([True] * n_cols)
        if tab.value() > 0:
            return LpSolution("infeasible", farkas=row_multipliers())
        for r in range(nr):
            if is_art[tab.basis[r]]:
                j = next((j for j in range(n_cols) if not is_art[j] and tab.rows[r][j] != 0), None)
                if j is not None:
                    tab.pivot(r, j)
                # otherwise the row is redundant and its artificial stays basic at zero

    tab.set_cost(list(problem.c) + [ZERO] * (n_cols - nv))
    status = tab.run([not a for a in is_art])
    if status == "unbounded":
        return LpSolution("unbounded")
    xprime = [ZERO] * nv
    for r, bv in enumerate(tab.basis):
        if bv < nv:
            xprime[bv] = tab.rhs[r]
    x = tuple(v + l for v, l in zip(xprime, problem.lb))
    objective = sum((c * v for c, v in zip(problem.c, x)), ZERO)
    basis = tuple(sorted(bv for bv in tab.basis if bv < nv))
    return LpSolution("optimal", x, objective, basis, duals=row_multipliers())


def _row_dot(y, problem: LpProblem, j: int) -> Fraction:
    return sum((y[i] * problem.A[i][j] for i in range(problem.n_rows)), ZERO)


def _sign_ok(y, problem: LpProblem) -> bool:
    for yi, s in zip(y, problem.senses):
        if s == ">=" and yi < 0:
            return False
        if s == "<=" and yi > 0:
            return False
    return True


def check_certificate(problem: LpProblem, solution: LpSolution) -> bool:
    """Re-verify a solution by direct arithmetic, never trusting solver state.

    Optimal: primal feasibility, dual feasibility and equal objectives.
    Infeasible: the Farkas vector proves that no feasible point exists.
    """
    if solution.status == "optimal":
        x, y = solution.values, solution.duals
        if any(v < l for v, l in zip(x, problem.lb)):
            return False
        for row, s, bi in zip(problem.A, problem.senses, problem.b):
            lhs = sum((a * v for a, v in zip(row, x)), ZERO)
            if (s == "<=" and lhs > bi) or (s == ">=" and lhs < bi) or (s == "=" and lhs != bi):
                return False
        if y is None or not _sign_ok(y, problem):
            return False
        reduced = [problem.c[j] - _row_dot(y, problem, j) for j in range(problem.n_vars)]
        if any(r < 0 for r in reduced):
            return False
        dual_obj = (sum((yi * bi for yi, bi in zip(y, problem.b)), ZERO)
                    + sum((r * l for r, l in zip(reduced, problem.lb)), ZERO))
        return dual_obj == solution.objective
    if solution.status == "infeasible":
        y = solution.farkas
        if y is None or not _sign_ok(y, problem):
            return False
        if any(_row_dot(y, problem, j) > 0 for j in range(problem.n_vars)):
            return False
        shifted = [bi - sum((a * l for a, l in zip(row, problem.lb)), ZERO)
                   for row, bi in zip(problem.A, problem.b)]
        return sum((yi * bi for yi, bi in zip(y, shifted)), ZERO) > 0
    return True


# ---------------------------------------------------------------------------
# Minimum-payment LPs for a target action


@dataclass(frozen=True)
class DualCertificate:
    """Witness that an action cannot be implemented.

    ``lambdas`` maps each other action to its weight in a convex
    combination.  For ``kind == "non-implementability"`` the mixture
    reproduces the target distribution at lower cost; for
    ``"monotone-non-implementability"`` it first-order stochastically
    dominates the target at lower cost, and ``mus`` holds the monotonicity
    multipliers for t_2..t_m.
    """

    action: int
    kind: str
    lambdas: Dict[int, Fraction]
    mus: Optional[tuple] = None

    def mixture(self, instance: Instance) -> tuple:
        return tuple(sum((w * instance.actions[k].probs[j] for k, w in self.lambdas.items()), ZERO)
                     for j in range(instance.m))

    def mixture_cost(self, instance: Instance) -> Fraction:
        return sum((w * instance.actions[k].cost for k, w in self.lambdas.items()), ZERO)

    def verify(self, instance: Instance) -> bool:
        a = self.action
        if a in self.lambdas or any(w < 0 for w in self.lambdas.values()):
            return False
        if sum(self.lambdas.values()) != 1:
            return False
        target = instance.actions[a]
        mix = self.mixture(instance)
        if not self.mixture_cost(instance) < target.cost:
            return False
        if self.kind == "non-implementability":
            return mix == target.probs
        if self.kind == "monotone-non-implementability":
            # dual rows: F_a1 <= G_1 + mu_2, F_aj <= G_j + mu_{j+1} - mu_j, F_am <= G_m - mu_m
            mus = self.mus
            m = instance.m
            if mus is None or len(mus) != m - 1 or any(u < 0 for u in mus):
                return False
            cdf_t = cdf_g = ZERO
            for j in range(m):
                cdf_t += target.probs[j]
                cdf_g += mix[j]
                if cdf_g > cdf_t:
                    return False
            mu = (ZERO,) + tuple(mus) + (ZERO,)  # mu[j] for j = 1..m, padded
            for j in range(m):
                if target.probs[j] > mix[j] + mu[j + 1] - mu[j]:
                    return False
            return True
        return False


def _needs_ir(instance: Instance) -> bool:
    return not instance.assumptions.A3


def min_payment_problem(instance: Instance, action_index: int, monotone: bool = False,
                        support: Optional[Sequence[int]] = None) -> LpProblem:
    """Build the minimum-expected-payment LP for ``action_index``.

    Variables are the payments on ``support`` (all outcomes by default).
    Rows: one IC constraint per other action, an IR row when no zero-cost
    action exists, then ``t_j >= t_{j-1}`` when ``monotone``.
    """
    cols = list(range(instance.m)) if support is None else list(support)
    target = instance.actions[action_index]
    c = [target.probs[j] for j in cols]
    A, senses, b = [], [], []
    for k, other in enumerate(instance.actions):
        if k == action_index:
            continue
        A.append([target.probs[j] - other.probs[j] for j in cols])
        senses.append(">=")
        b.append(target.cost - other.cost)
    if _needs_ir(instance):
        A.append([target.probs[j] for j in cols])
        senses.append(">=")
        b.append(target.cost)
    if monotone:
        for pos in range(1, len(cols)):
            row = [ZERO] * len(cols)
            row[pos], row[pos - 1] = Fraction(1), Fraction(-1)
            A.append(row)
            senses.append(">=")
            b.append(ZERO)
    return LpProblem(tuple(c), tuple(tuple(r) for r in A), tuple(senses), tuple(b))


def min_payment_lp(instance: Instance, action_index: int, monotone: bool = False) -> LpSolution:
    return solve_lp(min_payment_problem(instance, action_index, monotone))


def _ic_rows(instance: Instance, action_index: int) -> List[int]:
    return [k for k in range(instance.n) if k != action_index]


def dual_lambdas(instance: Instance, action_index: int, solution: LpSolution) -> Dict[int, Fraction]:
    """IC multipliers of a solved LP, keyed by the competing action."""
    y = solution.duals if solution.optimal else solution.farkas
    return {k: y[r] for r, k in enumerate(_ic_rows(instance, action_index))}


def dual_objective(instance: Instance, action_index: int, solution: LpSolution) -> Fraction:
    """Objective of the dual LP: sum of lambda_k (c_a - c_k), plus the IR term."""
    y = solution.duals
    a = instance.actions[action_index]
    value = sum((lam * (a.cost - instance.actions[k].cost)
                 for k, lam in dual_lambdas(instance, action_index, solution).items()), ZERO)
    if _needs_ir(instance):
        value += y[instance.n - 1] * a.cost
    return value


def _certificate(instance: Instance, action_index: int, solution: LpSolution, monotone: bool) -> DualCertificate:
    lambdas = dual_lambdas(instance, action_index, solution)
    total = sum(lambdas.values(), ZERO)
    if total <= 0:
        raise LpError("Farkas vector carries no weight on the IC rows")
    weights = {k: w / total for k, w in lambdas.items() if w != 0}
    if monotone:
        target = instance.actions[action_index].probs
        mix = [sum((w * instance.actions[k].probs[j] for k, w in weights.items()), ZERO)
               for j in range(instance.m)]
        mus, gap = [], ZERO
        for j in range(instance.m - 1):
            gap += target[j] - mix[j]
            mus.append(gap)
        cert = DualCertificate(action_index, "monotone-non-implementability", weights, tuple(mus))
    else:
        cert = DualCertificate(action_index, "non-implementability", weights)
    if not cert.verify(instance):
        raise LpError(f"certificate for action {action_index} failed re-verification")
    return cert


def _solve_min_payment(instance: Instance, action_index: int, monotone: bool) -> Union[Contract, DualCertificate]:
    problem = min_payment_problem(instance, action_index, monotone)
    solution = solve_lp(problem)
    if not check_certificate(problem, solution):
        raise LpError("LP solution failed re-verification")
    if solution.status == "infeasible":
        return _certificate(instance, action_index, solution, monotone)
    if solution.status != "optimal":
        raise LpError(f"minimum-payment LP reported {solution.status}")
    contract = Contract(solution.values)
    if not implements_up_to_ties(instance, action_index, contract):
        raise LpError("LP contract does not make the target action incentive compatible")
    return contract


def min_payment_contract(instance: Instance, action_index: int) -> Union[Contract, DualCertificate]:
    """Cheapest contract implementing the action, or a certificate that none does."""
    return _solve_min_payment(instance, action_index, monotone=False)


def min_payment_monotone(instance: Instance, action_index: int) -> Union[Contract, DualCertificate]:
    """Cheapest nondecreasing contract implementing the action, or a certificate."""
    return _solve_min_payment(instance, action_index, monotone=True)


def is_implementable(instance: Instance, action_index: int, monotone: bool = False
                     ) -> Tuple[bool, Optional[DualCertificate]]:
    problem = min_payment_problem(instance, action_index, monotone)
    problem = LpProblem((ZERO,) * problem.n_vars, problem.A, problem.senses, problem.b)
    solution = solve_lp(problem)
    if solution.status == "infeasible":
        return False, _certificate(instance, action_index, solution, monotone)
    return True, None


def implements_up_to_ties(instance: Instance, action_index: int, contract: AnyContract) -> bool:
    """True when the action is IC and IR, i.e. in the agent's tie set.

    The agent's principal-favoring tie-break may still pick another member
    of the tie set; :func:`agent_best_response` says which.
    """
    payments = payments_of(instance, contract)
    utils = [expected_payment(instance, k, payments) - instance.actions[k].cost for k in range(instance.n)]
    return utils[action_index] >= 0 and utils[action_index] == max(utils)


def implements(instance: Instance, action_index: int, contract: AnyContract) -> bool:
    """True when the agent's best response (with tie-breaking) is the action."""
    return agent_best_response(instance, contract).choice == action_index


def sparsify_to_basic(instance: Instance, action_index: int, contract: AnyContract) -> Contract:
    """Return an equally cheap implementing contract with few positive payments.

    The result has at most as many positive payments as the LP has
    constraint rows (n-1 when a zero-cost action exists).
    """
    contract = Contract(payments_of(instance, contract))
    if not implements_up_to_ties(instance, action_index, contract):
        raise NotOptimalInput("contract does not implement the action")
    paid = expected_payment(instance, action_index, contract)
    best = min_payment_lp(instance, action_index)
    if not best.optimal or paid > best.objective:
        raise NotOptimalInput(f"expected payment {paid} exceeds the LP optimum {best.objective}")
    rows = instance.n - 1 + (1 if _needs_ir(instance) else 0)
    if contract.positive_count() <= rows:
        return contract
    support = [j for j, t in enumerate(contract.payments) if t > 0]
    restricted = solve_lp(min_payment_problem(instance, action_index, support=support))
    if not restricted.optimal or restricted.objective != paid:
        raise LpError("restricted LP lost optimality")
    payments = [ZERO] * instance.m
    for j, v in zip(support, restricted.values):
        payments[j] = v
    return Contract(payments)
