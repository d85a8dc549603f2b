# %% [markdown]
# # Gauge integrals, exceptional sets and uniqueness
#
# Whether boundary limits exist outside a small set depends on a gauge
# integral built from phi and a dimension gauge h.  We classify a few cells,
# estimate the content of the sets where the discrete length is large, and
# compare limits along two curves ending at the same boundary point.

# %%
import math

import numpy as np

from johnlimits.generators import make_domain
from johnlimits.john import JohnProfile, construct_john_curve, construct_john_curves
from johnlimits.maps import make_map
from johnlimits.trace import GaugeFunction, discrete_length, exceptional_content, gauge_integral, profile_for, uniqueness_check
from johnlimits.whitney import whitney_decomposition

for phi in ("t", "sqrt"):
    for h in (GaugeFunction("power", alpha=1.0), GaugeFunction("log", beta=3.0)):
        v = gauge_integral(profile_for(phi), h, 2.0, "A1")
        print(f"phi={phi:4s} h={h.label:12s} finite={v.finite} value={v.value}")

# %% [markdown]
# Exceptional sets on the square: boundary samples whose curve has discrete
# length at least k, and an upper bound for their h-content with h(t) = t.
# The oscillating map depends only on the distance to the boundary, so every
# curve has the same length and each set is either everything or empty.
# Compare the identity map, whose lengths vary from point to point.

# %%
sq = make_domain("square", "1/32")
w = whitney_decomposition(sq)
prof = JohnProfile.identity(2.0)
curves, _ = construct_john_curves(sq, sq.boundary, prof)
for name in ("oscillate", "identity"):
    f = make_map(name, sq)
    lengths = {x: discrete_length(f, w, cv).columns["crossing"]["total"] for x, cv in curves.items()}
    levels = np.quantile(list(lengths.values()), [0.0, 0.5, 0.9, 1.0]) + [0, 0, 0, 1e-3]
    for rep in exceptional_content(f, sq, w, curves, GaugeFunction("power", alpha=1.0), levels, lengths=lengths):
        print(f"{name:10s} k={rep.threshold:6.3f} |A_k|={len(rep.ids):4d} content<={rep.content_bound:.3f}")

# %% [markdown]
# On the slit disc the two sides of the slit reach the point (1, 0) along
# different routes, and the angle map has different limits along them.

# %%
slit = make_domain("slit-disc", "1/64")
ws = whitney_decomposition(slit)
co = slit.space.coords
xi = int(min(slit.boundary, key=lambda i: math.dist(co[i], (1.0, 0.0))))
upper = co[slit.interior, 1] >= 0
p4 = JohnProfile.identity(4.0)
gamma = construct_john_curve(slit, xi, p4, upper)
eta = construct_john_curve(slit, xi, p4, ~upper | (co[slit.interior, 1] == 0))
res = uniqueness_check(make_map("angle", slit), slit, ws, xi, gamma, eta, [1 / 8, 1 / 16], p4)
print("gap", round(res["gap"], 3), "verdict", res["verdict"], "uniform", res["uniform_hypothesis"])
print("chain lengths", [r["chain_length"] for r in res["scales"]], np.round([r["distance"] for r in res["scales"]], 3))
