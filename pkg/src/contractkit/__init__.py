"""Exact-arithmetic toolkit for principal-agent contract design.

Optimal contracts via minimum-payment LPs, linear contracts via the
upper envelope of the agent's utility lines, worst-case analysis for
ambiguous actions, and the standard lower-bound instance families.
"""

from .core import (
    Action,
    AffineContract,
    AssumptionViolated,
    Assumptions,
    BestResponse,
    Contract,
    ContractError,
    Instance,
    LinearContract,
    MalformedInstance,
    PreconditionFailed,
    agent_best_response,
    build_instance,
    expected_payment,
    expected_reward,
    principal_payoff,
    to_rational,
    welfare,
)
from .lp import (
    DualCertificate,
    LpProblem,
    LpSolution,
    check_certificate,
    is_implementable,
    min_payment_contract,
    min_payment_monotone,
    solve_lp,
    sparsify_to_basic,
)
from .contracts import (
    best_debt,
    best_linear,
    best_monotone,
    cdfp_check,
    fosd_check,
    implemented_action,
    mlrp_check,
    optimal_contract,
    single_payment_contract,
    upper_envelope,
)

__version__ = "0.1.0"
