import numpy as np
import pytest

from cuspfs.geometry import TensorField, scalar_field
from cuspfs.grid import ChartGrid
from cuspfs.geometry import MetricField
from cuspfs.parabolic import (
    DiffusionProblem,
    NumericalFailure,
    desingularize_operator,
    flat_torus_geometry,
    identity_diffusion,
    laplace_beltrami,
    laplace_beltrami_divergence_form,
    manufactured_solution,
    maximal_regularity_functional,
    solve_ivp,
)


class TestLaplaceBeltrami:
    def test_flat_paraboloid(self):
        x = np.linspace(-1.0, 1.0, 96)
        grid = ChartGrid([x, x])
        eye = np.broadcast_to(np.eye(2), grid.shape + (2, 2)).copy()
        g = MetricField(grid, eye)
        X, Y = grid.coords()
        lap = laplace_beltrami(scalar_field(grid, X**2 + Y**2), g)
        assert np.max(np.abs(lap.values - 4.0)) < 1e-9

    def test_cylinder_eigenfunction(self):
        # u = sin s sin theta on ds^2 + dtheta^2 has Laplacian -2u
        h = 3.8e-3
        s = np.linspace(0.0, 1.0, int(1.0 / h) + 1)
        th = np.linspace(0.0, 2 * np.pi, int(2 * np.pi / h) + 1)[:-1]
        grid = ChartGrid([s, th], periodic=[False, True], periods=[None, 2 * np.pi])
        eye = np.broadcast_to(np.eye(2), grid.shape + (2, 2)).copy()
        g = MetricField(grid, eye)
        S, TH = grid.coords()
        u = scalar_field(grid, np.sin(S) * np.sin(TH))
        lap = laplace_beltrami(u, g)
        # boundary rows use composed one-sided stencils and get replaced by
        # boundary conditions in any solve; the operator identity is interior
        assert np.max(np.abs(lap.values + 2.0 * u.values)[4:-4]) < 1e-5

    def test_cone_radial_square(self, cone_grid):
        grid, g = cone_grid
        T = grid.coords()[0]
        lap = laplace_beltrami(scalar_field(grid, T**2), g)
        assert np.max(np.abs(lap.values - 4.0)) < 1e-5

    def test_divergence_form_cross_check(self, cusp_2d):
        _, geom = cusp_2d
        s, th = geom.grid.coords()
        u = scalar_field(geom.grid, np.sin(s) * (1 + 0.5 * np.cos(th)) * geom.rho.values**0.5)
        a = laplace_beltrami(u, geom.g).values
        b = laplace_beltrami_divergence_form(u, geom.g).values
        interior = (slice(4, -4), slice(None))
        scale = np.max(np.abs(a[interior]))
        assert np.max(np.abs((a - b)[interior])) / scale < 2e-3


class TestProblemValidation:
    def test_ellipticity_violation_reports_node(self, cusp_1d):
        _, geom = cusp_1d
        a = identity_diffusion(geom) * -1.0
        u0 = scalar_field(geom.grid, np.zeros(geom.grid.shape))
        with pytest.raises(ValueError, match="ellipticity"):
            DiffusionProblem(geom, a, 1.0, 0.0, 2.0, 0.1, None, u0)

    def test_anisotropic_tensor_passes_with_correct_bound(self, cusp_1d):
        _, geom = cusp_1d
        a = identity_diffusion(geom) * 0.5
        u0 = scalar_field(geom.grid, np.zeros(geom.grid.shape))
        DiffusionProblem(geom, a, 0.5, 0.0, 2.0, 0.1, None, u0)
        with pytest.raises(ValueError, match="ellipticity"):
            DiffusionProblem(geom, a, 0.9, 0.0, 2.0, 0.1, None, u0)

    def test_q_range(self, cusp_1d):
        _, geom = cusp_1d
        u0 = scalar_field(geom.grid, np.zeros(geom.grid.shape))
        with pytest.raises(ValueError):
            DiffusionProblem(geom, identity_diffusion(geom), 1.0, 0.0, 1.0, 0.1, None, u0)


class TestOperator:
    def test_trivial_weight_reduces_to_laplacian(self):
        tor = flat_torus_geometry(32, 32)
        prob = DiffusionProblem(
            tor, identity_diffusion(tor), 1.0, 0.0, 2.0, 0.1, None,
            scalar_field(tor.grid, np.zeros(tor.grid.shape)),
        )
        op = desingularize_operator(prob)
        assert np.max(np.abs(op.c1.data)) == 0.0
        assert np.max(np.abs(op.c0.values)) == 0.0
        assert np.max(np.abs(op.c2.data - tor.ghat.gu)) < 1e-10
        u = scalar_field(tor.grid, np.sin(tor.grid.coords()[0]))
        got = op.apply(u)
        assert np.max(np.abs(got.values - laplace_beltrami(u, tor.g).values * -1.0)) < 1e-12

    def test_principal_part_is_hat_inverse_metric(self, cusp_1d):
        _, geom = cusp_1d
        prob = DiffusionProblem(
            geom, identity_diffusion(geom), 1.0, 1.0, 2.0, 0.1, None,
            scalar_field(geom.grid, np.zeros(geom.grid.shape)),
        )
        op = desingularize_operator(prob)
        assert np.max(np.abs(op.c2.data - geom.ghat.gu)) < 1e-12
        assert op.ellipticity >= 1.0 - 1e-10

    def test_conjugation_identity(self, cusp_1d):
        cusp, _ = cusp_1d
        geom = cusp.cylinder_geometry(6.0, 12289)
        lam = 1.0
        prob = DiffusionProblem(
            geom, identity_diffusion(geom), 1.0, lam, 2.0, 0.1, None,
            scalar_field(geom.grid, np.zeros(geom.grid.shape)),
        )
        op = desingularize_operator(prob)
        u_hat_star, _ = manufactured_solution(geom, lam)
        uh = scalar_field(geom.grid, u_hat_star(0.0))
        path1 = op.apply(uh).values
        v = scalar_field(geom.grid, geom.rho.values**lam * uh.values)
        path2 = geom.rho.values ** (2.0 - lam) * (-laplace_beltrami(v, geom.g).values)
        assert np.max(np.abs((path1 - path2)[4:-4])) < 1e-5


class TestSolve:
    def test_zero_data_zero_solution(self, cusp_1d):
        _, geom = cusp_1d
        u0 = scalar_field(geom.grid, np.zeros(geom.grid.shape))
        prob = DiffusionProblem(geom, identity_diffusion(geom), 1.0, 0.0, 2.0, 0.05, None, u0)
        traj = solve_ivp(prob, 0.01)
        assert max(np.max(np.abs(u.values)) for u in traj.u) == 0.0
        lhs, rhs, ratio = maximal_regularity_functional(traj, prob)
        assert ratio == 0.0

    def test_heat_mode_decay(self):
        tor = flat_torus_geometry(48, 48)
        u0 = scalar_field(tor.grid, np.sin(tor.grid.coords()[1]))
        prob = DiffusionProblem(tor, identity_diffusion(tor), 1.0, 0.0, 2.0, 0.5, None, u0)
        traj = solve_ivp(prob, 1e-3)
        amp = np.max(np.abs(traj.u[-1].values))
        assert abs(amp - np.exp(-0.5)) / np.exp(-0.5) < 0.01

    def test_crank_nicolson_beats_euler_in_time(self):
        tor = flat_torus_geometry(24, 24)
        u0 = scalar_field(tor.grid, np.sin(tor.grid.coords()[1]))
        errs = {}
        for scheme in ("implicit-euler", "crank-nicolson"):
            prob = DiffusionProblem(tor, identity_diffusion(tor), 1.0, 0.0, 2.0, 0.25, None, u0)
            traj = solve_ivp(prob, 0.025, scheme)
            # compare against the discrete-in-space eigenvalue decay
            h = tor.grid.axes[1][1] - tor.grid.axes[1][0]
            lam_h = (2.0 - 2.0 * np.cos(h)) / h**2
            exact = np.exp(-lam_h * 0.25)
            errs[scheme] = abs(np.max(np.abs(traj.u[-1].values)) - exact)
        assert errs["crank-nicolson"] < errs["implicit-euler"] / 5.0

    def test_linearity(self, cusp_1d):
        cusp, _ = cusp_1d
        geom = cusp.cylinder_geometry(6.0, 257)
        u_hat_star, f_hat_star = manufactured_solution(geom, 1.0)
        rho = geom.rho.values
        f = lambda t: rho ** (-1.0) * f_hat_star(t)
        u0 = scalar_field(geom.grid, rho ** (1.0 - 1.0) * u_hat_star(0.0))
        p1 = DiffusionProblem(geom, identity_diffusion(geom), 1.0, 1.0, 2.0, 0.05, f, u0)
        t1 = solve_ivp(p1, 5e-3)
        p2 = DiffusionProblem(
            geom, identity_diffusion(geom), 1.0, 1.0, 2.0, 0.05,
            lambda t: 2.0 * f(t), scalar_field(geom.grid, 2.0 * u0.values),
        )
        t2 = solve_ivp(p2, 5e-3)
        scale = np.max(np.abs(t1.u[-1].values))
        assert np.max(np.abs(t2.u[-1].values - 2.0 * t1.u[-1].values)) / scale < 1e-10

    def test_time_step_validation(self, cusp_1d):
        _, geom = cusp_1d
        u0 = scalar_field(geom.grid, np.zeros(geom.grid.shape))
        prob = DiffusionProblem(geom, identity_diffusion(geom), 1.0, 0.0, 2.0, 0.05, None, u0)
        with pytest.raises(ValueError):
            solve_ivp(prob, 0.1)
        with pytest.raises(ValueError):
            solve_ivp(prob, 0.01, "leapfrog")

    def test_mms_time_first_order(self, cone_1d):
        cusp, _ = cone_1d
        geom = cusp.cylinder_geometry(6.0, 385)
        lam, q = 0.0, 2.0
        u_hat_star, _ = manufactured_solution(geom, lam)
        base = DiffusionProblem(
            geom, identity_diffusion(geom), 1.0, lam, q, 0.2, None,
            scalar_field(geom.grid, np.zeros(geom.grid.shape)),
        )
        op = desingularize_operator(base)
        rho = geom.rho.values

        def f(t):
            fh = -u_hat_star(t) + (op.matrix @ u_hat_star(t).ravel()).reshape(geom.grid.shape)
            return rho ** (lam - 2.0) * fh

        errs = []
        for dt in (8e-3, 4e-3):
            prob = DiffusionProblem(
                geom, identity_diffusion(geom), 1.0, lam, q, 0.2, f,
                scalar_field(geom.grid, rho ** (lam - 2.0 / q) * u_hat_star(0.0)),
            )
            traj = solve_ivp(prob, dt)
            w = geom.grid.cell_weights()
            errs.append(np.sqrt(np.sum((traj.u_hat[-1] - u_hat_star(0.2)) ** 2 * w)))
        assert 0.9 <= np.log2(errs[0] / errs[1]) <= 1.1

    def test_mr_functional_positive_and_stable(self, cusp_1d):
        cusp, _ = cusp_1d
        ratios = []
        for ns, dt in ((257, 4e-3), (513, 2e-3)):
            geom = cusp.cylinder_geometry(6.0, ns)
            lam, q = 1.0, 2.0
            u_hat_star, f_hat_star = manufactured_solution(geom, lam)
            rho = geom.rho.values
            f = lambda t: rho ** (lam - 2.0) * f_hat_star(t)
            u0 = scalar_field(geom.grid, rho ** (lam - 2.0 / q) * u_hat_star(0.0))
            prob = DiffusionProblem(geom, identity_diffusion(geom), 1.0, lam, q, 0.2, f, u0)
            lhs, rhs, ratio = maximal_regularity_functional(solve_ivp(prob, dt), prob)
            assert lhs > 0 and rhs > 0
            ratios.append(ratio)
        assert abs(ratios[1] - ratios[0]) / ratios[0] < 0.1


class TestAnisotropicAndTwoDimensional:
    def test_constant_anisotropic_tensor_eigen_decay(self):
        # a = [[2, 1/2], [1/2, 1]] sends sin(x + y) to 4 sin(x + y): the solve
        # exercises the mixed-derivative stencils and the decay is e^(-4t)
        tor = flat_torus_geometry(48, 48)
        amat = np.array([[2.0, 0.5], [0.5, 1.0]])
        a = TensorField(tor.grid, 1, 1, np.broadcast_to(amat, tor.grid.shape + (2, 2)).copy())
        X, Y = tor.grid.coords()
        u0 = scalar_field(tor.grid, np.sin(X + Y))
        prob = DiffusionProblem(tor, a, 0.5, 0.0, 2.0, 0.25, None, u0)
        op = desingularize_operator(prob)
        applied = (op.matrix @ u0.values.ravel()).reshape(tor.grid.shape)
        h = tor.grid.axes[0][1] - tor.grid.axes[0][0]
        assert np.max(np.abs(applied - 4.0 * u0.values)) < 4.0 * h**2
        # matrix stencils and iterated covariant derivatives are two O(h^2)
        # discretizations of the same operator
        assert np.max(np.abs(applied - op.apply(u0).values)) < 3.0 * h**2
        traj = solve_ivp(prob, 1e-3)
        amp = np.max(np.abs(traj.u[-1].values))
        assert abs(amp - np.exp(-1.0)) / np.exp(-1.0) < 0.01

    def test_cusp_surface_mms_and_mr(self, cusp_2d):
        cusp, _ = cusp_2d
        geom = cusp.cylinder_geometry(6.0, 257, 24)
        lam, q = 1.0, 2.0
        u_hat_star, f_hat_star = manufactured_solution(geom, lam)
        rho = geom.rho.values
        f = lambda t: rho ** (lam - 2.0) * f_hat_star(t)
        u0 = scalar_field(geom.grid, rho ** (lam - 2.0 / q) * u_hat_star(0.0))
        prob = DiffusionProblem(geom, identity_diffusion(geom), 1.0, lam, q, 0.1, f, u0)
        traj = solve_ivp(prob, 2e-3)
        w = geom.grid.cell_weights()
        ref = u_hat_star(0.1)
        err = np.sqrt(np.sum((traj.u_hat[-1] - ref) ** 2 * w) / np.sum(ref**2 * w))
        assert err < 5e-3
        lhs, rhs, ratio = maximal_regularity_functional(traj, prob)
        assert 0.0 < ratio < 10.0


class TestTrajectory:
    def test_difference_quotients(self, cusp_1d):
        cusp, _ = cusp_1d
        geom = cusp.cylinder_geometry(6.0, 129)
        u_hat_star, f_hat_star = manufactured_solution(geom, 0.0)
        rho = geom.rho.values
        f = lambda t: rho**-2.0 * f_hat_star(t)
        u0 = scalar_field(geom.grid, rho ** (-1.0) * u_hat_star(0.0))
        prob = DiffusionProblem(geom, identity_diffusion(geom), 1.0, 0.0, 2.0, 0.04, f, u0)
        traj = solve_ivp(prob, 0.01)
        d = traj.dudt(1)
        assert d.shape == geom.grid.shape
        with pytest.raises(ValueError):
            traj.dudt(0)
