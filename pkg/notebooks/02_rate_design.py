"""
From link qualities to degree profiles
======================================

Design rates for the two layers, then fit small integer degrees to them.
"""

# %%
from bilayer_sc.ensemble import CODE_A, CODE_B, REFERENCE_RATES, design_rate
from bilayer_sc.rate_design import DesignSpec, design, fit_degrees, target_from_table
from bilayer_sc.theory import ChannelSet

# %% [markdown]
# Termination costs rate. Two ways of counting the last check positions are
# shown; the second one is what the code table uses.

# %%
for L in (50, 100, 600, 5000):
    print(L, float(design_rate(6, 10, L, 10)), float(design_rate(6, 10, L, 10, include_last=True)))

# %%
for name, code in (("A", CODE_A), ("B", CODE_B)):
    rb = code.rate_bundle()
    print(name, round(rb.Rtilde1, 4), round(rb.Rtilde2, 4), round(rb.Rsynd1, 4),
          round(rb.Rsynd2, 4), "table:", REFERENCE_RATES[name])

# %% [markdown]
# Symmetric links chosen so that the correlated design lands on Code A.

# %%
links = ChannelSet(0.45209, 0.45209, 0.61877, 0.61877, 0.0)
rb = design(DesignSpec(links, 0.3, tie_rs1=0.85))
print(rb)
fit = fit_degrees(rb, r_max=10, M_base=100)
e = fit.ensemble
print((e.l1, e.r1, e.ls1, e.rs1), (e.l2, e.r2, e.ls2, e.rs2), "M =", e.M1, e.M2,
      "gap", round(fit.max_gap(), 4))

# %%
fit = fit_degrees(target_from_table(REFERENCE_RATES["B"]), r_max=20, M_base=100)
e = fit.ensemble
print((e.l1, e.r1, e.l2, e.r2, e.ls1, e.rs1, e.ls2, e.rs2), "M =", e.M1, e.M2)
