# %% [markdown]
# # Linear contracts versus the optimum
#
# Two small instances.  In the first, one action is free and the other
# costs 4/3; paying only for the high outcome beats every linear contract.

# %%
from fractions import Fraction

from contractkit.contracts import best_linear, best_monotone, optimal_contract, upper_envelope
from contractkit.core import expected_payment
from contractkit.families import gen_example
from contractkit.lp import min_payment_contract, min_payment_monotone

inst = gen_example("example12")
opt = optimal_contract(inst)
lin = best_linear(inst)
print("outcomes", inst.outcomes, "rewards", inst.rewards, "costs", inst.costs)
print("optimal contract", opt.contract.payments, "payoff", opt.payoff)
print("best linear alpha", lin.alpha, "payoff", lin.payoff)
print("ratio", opt.payoff / lin.payoff)

# %% [markdown]
# The envelope of the agent's utility lines alpha*R - c tells which action
# each alpha buys.  The second action only kicks in at alpha = 2/3, which
# leaves the principal (1 - 2/3) * 3 = 1.

# %%
env = upper_envelope(inst)
for seg in env.segments:
    print(f"alpha in [{seg.lo}, {seg.hi}] -> action {seg.action}")

# %% [markdown]
# A six-outcome instance where the optimal contract is neither linear nor
# monotone: it pays more for a middle outcome than for the top ones.

# %%
inst = gen_example("example11")
opt = optimal_contract(inst)
print("optimal action", opt.action, "payoff", float(opt.payoff))
print("payments", [str(t) for t in opt.contract.payments])
free = min_payment_contract(inst, 2)
mono = min_payment_monotone(inst, 2)
print("cheapest expected payment for action 2:", expected_payment(inst, 2, free),
      "monotone:", expected_payment(inst, 2, mono))
print("best monotone payoff", float(best_monotone(inst).payoff))
print("best linear payoff", float(best_linear(inst).payoff))
