# %% [markdown]
# # How badly can linear contracts do?
#
# In the diagonal family every action is linearly implementable, yet each
# earns the principal exactly 1 under its cheapest linear contract, while
# the optimum grows like n.

# %%
from fractions import Fraction

from contractkit.contracts import best_linear, best_monotone, optimal_contract
from contractkit.families import audit_ratio, gen_appendixE, gen_appendixF, gen_thm52

for eps in (Fraction(1, 2), Fraction(1, 10), Fraction(1, 100)):
    row = []
    for n in range(2, 9):
        rep = audit_ratio(gen_thm52(n, eps))
        row.append(f"{float(rep.rho):.3f}")
    print(f"eps={eps}: ratios for n=2..8:", " ".join(row))

# %% [markdown]
# The family above uses n outcomes.  Squeezing it onto three outcomes, with
# a small bonus delta on the middle one, keeps almost the whole gap.

# %%
eps, delta = Fraction(1, 100), Fraction(1, 1000)
for n in (3, 4, 5):
    inst = gen_appendixE(n, eps, delta)
    opt, lin = optimal_contract(inst).payoff, best_linear(inst).payoff
    print(f"n={n}: OPT={float(opt):.4f} ALG={float(lin):.6f} ratio={float(opt / lin):.4f}")

# %% [markdown]
# Monotone contracts are not a cure either: with four outcomes and one
# extra action the best monotone contract earns about 1 while the optimum
# is close to n - 1.

# %%
inst = gen_appendixF(4, Fraction(1, 100), Fraction(1, 10 ** 4), Fraction(1, 10 ** 3))
print("OPT", float(optimal_contract(inst).payoff), "monotone", float(best_monotone(inst).payoff))
