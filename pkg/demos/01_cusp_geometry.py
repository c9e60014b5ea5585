"""Build a model cusp, inspect its metrics, and desingularize it.

A cusp surface K(R, S^1) is swept by revolving the profile R(t) = t^2 around
the axis.  Its intrinsic metric dt^2 + R^2 dtheta^2 degenerates at the tip,
but dividing by the singularity function R(t)^2 and switching to the
arclength coordinate s with ds = -dt/R turns it into the flat half-infinite
cylinder ds^2 + dtheta^2.
"""

import numpy as np

from cuspfs import (
    ArclengthMap,
    CuspBase,
    build_model_cusp,
    glue_cusp,
    make_characteristic,
    metric_equivalence_ratio,
    singularity_bound,
    validate_characteristic,
)

print("-- cusp characteristics ------------------------------------------")
R = make_characteristic("power", alpha=2.0)
print(f"R(t) = t^2 certified; scaled-derivative bounds c(j): {validate_characteristic(R, 4)}")
print(f"partial integrals of 1/R at cutoffs 1e-2..1e-8: {np.round(R.divergence_probe, 2)}")

am = ArclengthMap(R)
print(f"arclength rho(0.5) = {am(0.5):.12f}   (closed form 1/s - 1 gives 1)")
print(f"inverse: t(rho=3) = {am.inverse(3.0):.12f} (closed form 0.25)")

print("\n-- the model cusp and its embedding ------------------------------")
cusp = build_model_cusp(R, CuspBase("circle"), "cusp")
stretched = cusp.stretched_geometry(smax=5.0, ns=400, ntheta=32)
lo, hi = metric_equivalence_ratio(stretched.g, cusp.embedding_metric(stretched.grid))
print(f"g_Z vs first fundamental form: eigenvalue range [{lo:.6f}, {hi:.6f}]")
print("   (the closed form 1 + 4 t^2 tops out at 5 at the rim t = 1)")

cone = build_model_cusp(make_characteristic("power", alpha=1.0), CuspBase("circle"), "cone")
st_cone = cone.stretched_geometry(smax=4.0, ns=300, ntheta=32)
lo, hi = metric_equivalence_ratio(st_cone.g, cone.embedding_metric(st_cone.grid))
print(f"cone: metric equals the embedding pullback exactly: [{lo}, {hi}]")

print("\n-- desingularization ----------------------------------------------")
cyl = cusp.cylinder_geometry(smax=6.0, ns=500, ntheta=32)
eye = np.broadcast_to(np.eye(2), cyl.grid.shape + (2, 2))
print(f"g-hat on the cylinder chart deviates from ds^2 + dtheta^2 by {np.max(np.abs(cyl.ghat.gl - eye)):.2e}")
for k in range(3):
    print(f"weight regularity  rho^{k+1} |nabla^{k} d log rho|  <=  {singularity_bound(cyl, k):.4f}")

print("\n-- gluing into an outer region ------------------------------------")
glued = glue_cusp(cusp, eps0=0.25, eps1=0.5, smax=5.0, ns=300, ntheta=16)
t = glued.grid.axes[0]
rho = glued.rho.values[:, 0]
for probe in (0.15, 0.35, 0.8):
    i = np.argmin(np.abs(t - probe))
    print(f"t = {t[i]:.3f}: blended weight rho = {rho[i]:.6f}   (R(t) = {cusp.R(t[i]):.6f})")
print("below 0.25 the weight is R(t) exactly, above 0.5 it is exactly 1")
