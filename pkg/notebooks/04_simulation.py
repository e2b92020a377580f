"""
Finite-length peeling against density evolution
===============================================

Sample a Code A instance, run the three-phase protocol with common random
numbers, and locate the waterfall. Raising M moves the waterfall towards the
DE threshold.
"""

# %%
import dataclasses

import numpy as np

from bilayer_sc.code_sampler import empirical_rate, sample_instance
from bilayer_sc.density_evolution import DEParams, threshold_on_ray
from bilayer_sc.ensemble import CODE_A
from bilayer_sc.simulator import ChannelPoint, Simulator, waterfall_crossing

L, M, trials = 100, 300, 100

# %%
ens = dataclasses.replace(CODE_A.with_chain(L=L), M1=M, M2=M)
inst = sample_instance(ens, seed=1)
print("k =", inst.k, " empirical first-layer rate:", round(empirical_rate(inst.H1), 4))

# %%
thr = threshold_on_ray((0, 0), (1, 1), DEParams(ens, p=0.3), bisect_tol=1e-3).t
print("DE diagonal threshold:", thr)

# %%
eps = np.round(np.arange(0.40, 0.66, 0.02), 3)
pts = [ChannelPoint(e, e, 0.2, 0.2) for e in eps]
res = Simulator(inst).ber_sweep(pts, 0.3, trials, seed=1)
for e, r in zip(eps, res.erasure_rate()):
    print(f"{e:.2f}  {r:.2e}")
print("crossing of 0.1:", waterfall_crossing(eps, res.erasure_rate()))

# %%
print(res.to_csv(meta={"note": "diagonal sweep"}))
