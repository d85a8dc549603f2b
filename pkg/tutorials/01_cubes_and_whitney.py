# %% [markdown]
# # Dyadic cubes and Whitney cubes on the unit square
#
# A domain is a finite sample of a planar region with a marked set of
# boundary samples.  We build the nested dyadic cube system on it, then the
# Whitney decomposition whose cube sizes track the distance to the boundary.

# %%
import numpy as np

from johnlimits.dyadic import build_cube_system
from johnlimits.generators import make_domain
from johnlimits.whitney import overlap_counts, whitney_decomposition

dom = make_domain("square", "1/64")
print(dom.name, "interior", len(dom.interior), "boundary", len(dom.boundary))

# %% [markdown]
# The default cube system uses delta = 1/12 and net constants c0 = C0 = 1.
# `check()` counts violations of partition, nesting and the ball sandwich;
# every count should be zero.

# %%
cubes = build_cube_system(dom.space)
print("levels", cubes.levels, "cubes per level", [cubes.n_cubes(k) for k in cubes.levels])
print(cubes.check())

# %% [markdown]
# The Whitney decomposition picks maximal cubes whose distance to the
# boundary sits in the layer allowed by their level.

# %%
w = whitney_decomposition(dom)
print("cubes", len(w), "levels present", w.levels_present())
print(w.check())
for k in w.levels_present():
    sel = w.level == k
    print(f"level {k}: {sel.sum()} cubes, boundary distance {w.dist_to_boundary[sel].min():.4f}..{w.dist_to_boundary[sel].max():.4f}")

# %% [markdown]
# Overlap of the enlarged balls: how many cubes' (3/2)-balls contain each
# interior sample.

# %%
counts = overlap_counts(w)
print("max overlap", counts.max(), "mean", round(float(np.mean(counts)), 2))
