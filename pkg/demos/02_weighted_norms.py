"""Weighted Sobolev norms and the two-connection correction calculus.

The weighted norm of order k integrates rho^(-lambda + i - m/q) |nabla^i u|
for i <= k.  Because g-hat = g / rho^2 is uniformly regular, these norms are
equivalent to plain Sobolev norms of the desingularized manifold; the bridge
is the difference tensor S of the two Levi-Civita connections and the
correction families built from it by recursion.
"""

import numpy as np

from cuspfs import (
    CuspBase,
    WeightedNormSpec,
    build_model_cusp,
    commutator_check,
    correction_families,
    make_characteristic,
    make_corpus,
    norm_equivalence_report,
    scalar_field,
    weighted_sobolev_norm,
)
from cuspfs.weighted import nabla_list

cusp = build_model_cusp(make_characteristic("power", alpha=2.0), CuspBase("points"), "cusp")
geom = cusp.cylinder_geometry(smax=6.0, ns=2049)

print("-- an exactly integrable example ----------------------------------")
cone = build_model_cusp(make_characteristic("power", alpha=1.0), CuspBase("points"), "cone")
gcone = cone.cylinder_geometry(smax=20.0, ns=8193)
u = scalar_field(gcone.grid, gcone.rho.values)  # u decays like rho
val = weighted_sobolev_norm(u, gcone.g, WeightedNormSpec(0, 0.0, 2.0, gcone.rho))
print(f"||rho||_(k=0, lambda=0, q=2) = {val:.8f}   analytic value 2^-1/2 = {2**-0.5:.8f}")

print("\n-- the correction recursion ----------------------------------------")
fams = correction_families(geom.rho, geom.g, 3)
s = geom.grid.coords()[0]
w = scalar_field(geom.grid, np.sin(1.3 * s) * geom.rho.values**0.7)
nablas = nabla_list(w, geom.g, 3)
hats = [fams.hat_derivative(nablas, j) for j in range(4)]
back = [fams.plain_derivative(hats, j) for j in range(4)]
for k in range(4):
    resid = np.max(np.abs(back[k].data - nablas[k].data))
    print(f"k = {k}: forward substitution returns nabla^k u with residual {resid:.2e}")

print("\n-- norm equivalence across the conformal change -------------------")
corpus = make_corpus(geom, seed=0)
for k in (0, 1, 2):
    rep = norm_equivalence_report(corpus, geom, k, 2.0)
    print(f"k = {k}: weighted / desingularized norm ratios in [{rep['min']:.4f}, {rep['max']:.4f}]")
print("(k = 0 is the exact change-of-measure identity; higher k is an equivalence)")

print("\n-- weight commutator -----------------------------------------------")
for lam in (-1.0, 0.0, 1.5):
    out = commutator_check(corpus[0][1], geom, lam, 2)
    print(
        f"lambda = {lam:+.1f}: product-rule residual {out['residual']:.2e}, "
        f"two-sided ratio in [{out['ratio_min']:.3f}, {out['ratio_max']:.3f}]"
    )
