# %% [markdown]
# # John curves, discrete length and boundary limits on the disc
#
# Each boundary sample gets a curve to the domain center that keeps a
# clearance of at least phi(length travelled) / c from the boundary.  Summing
# image diameters of the Whitney cubes the curve visits gives the discrete
# length, and its tail sums bound how far the map can move near the end.

# %%
import math

from johnlimits.generators import make_domain
from johnlimits.john import JohnProfile, construct_john_curve, quasihyperbolic_distance, verify_john_curve
from johnlimits.maps import make_map
from johnlimits.trace import boundary_limit, discrete_length
from johnlimits.whitney import whitney_decomposition

dom = make_domain("disc", "1/64")
w = whitney_decomposition(dom)
prof = JohnProfile.identity(2.0)
co = dom.space.coords
xi = int(min(dom.boundary, key=lambda i: math.dist(co[i], (1.0, 0.0))))
curve = construct_john_curve(dom, xi, prof)
cert = verify_john_curve(dom, curve, prof)
print("curve length", round(curve.length, 4), "passed", cert.passed, "margin", round(cert.margin, 4))

# %% [markdown]
# Limits of three maps along that curve.  The identity and z^2 converge with
# an error radius equal to the tail sum; the oscillating map does not.

# %%
for name in ("identity", "square-z", "oscillate"):
    f = make_map(name, dom)
    rep = discrete_length(f, w, curve)
    lim = boundary_limit(f, w, curve, 0.25, report=rep)
    print(f"{name:10s} length {rep.columns['crossing']['total']:.3f} converged {lim.converged} "
          f"value {[round(v, 3) for v in lim.value]} radius {lim.error_radius:.3f}")

# %% [markdown]
# The quasihyperbolic distance from the center to the point (1/2, 0) should
# be close to log 2.

# %%
fine = make_domain("disc", "1/128")
y = int(min(fine.interior, key=lambda i: math.dist(fine.space.coords[i], (0.5, 0.0))))
print("k(0, 1/2) =", round(quasihyperbolic_distance(fine, fine.center, y).value, 4), "log 2 =", round(math.log(2), 4))
