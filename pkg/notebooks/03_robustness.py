# %% [markdown]
# # When only the means are known
#
# Each action is described by its expected reward and cost; nature may pick
# any distribution with that mean.  A linear contract pays alpha * R no
# matter what, so its payoff is guaranteed.  Other contracts can be
# exploited.

# %%
from contractkit.core import Contract
from contractkit.robust import (
    check_ambiguous,
    lemma42_construct,
    linear_worst_case,
    sample_contracts,
    two_point_adversary,
    verify_theorem_4_1,
)

amb = check_ambiguous([0, 1, 2], [(1, 0), ("3/2", "1/4")])
lin = linear_worst_case(amb)
print("best linear: alpha", lin.alpha, "payoff", lin.payoff)

t = Contract([0, 2, 1])
adv = two_point_adversary(amb, t)
print("contract", t.payments, "worst case", adv.payoff)
for i, d in enumerate(adv.distributions):
    print(f"  action {i}: mass {1 - d.p_hi} on outcome {d.lo}, {d.p_hi} on outcome {d.hi}")

# %% [markdown]
# The constructive argument: take the chord through the first and last
# payments as an affine contract, then pick distributions under which the
# original contract pays at least as much for the same action.

# %%
cons = lemma42_construct(amb, t)
print(cons.case, "pivot", cons.pivot, "affine", cons.affine)
print("contract payoff", cons.contract_payoff, "<= affine payoff", cons.affine_payoff)

report = verify_theorem_4_1(amb, sample_contracts(amb, 200, seed=0))
print("200 sampled contracts, linear still best:", report.ok)
