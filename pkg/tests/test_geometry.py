import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuspfs.characteristics import ArclengthMap, make_characteristic
from cuspfs.geometry import (
    GridMap,
    MetricDegeneracyError,
    MetricField,
    TensorField,
    bundle_norm,
    christoffel,
    complete_contraction,
    conformal_rescale,
    contract,
    covariant_derivative,
    field_to_csv,
    identity_map,
    integrate,
    pullback,
    scalar_field,
    tensor_product,
)
from cuspfs.grid import ChartGrid


def flat_grid(n=48):
    x = np.linspace(0.0, 1.0, n)
    y = np.linspace(0.0, 1.0, n)
    grid = ChartGrid([x, y])
    eye = np.broadcast_to(np.eye(2), grid.shape + (2, 2)).copy()
    return grid, MetricField(grid, eye)


class TestChristoffel:
    def test_flat_metric_vanishes(self):
        grid, g = flat_grid()
        assert np.max(np.abs(christoffel(g).data)) == 0.0

    def test_cone_metric(self, cone_grid):
        grid, g = cone_grid
        T = grid.coords()[0]
        gam = christoffel(g)
        assert np.max(np.abs(gam.data[..., 0, 1, 1] + T)) < 1e-6
        assert np.max(np.abs(gam.data[..., 1, 0, 1] - 1.0 / T)) < 1e-6

    def test_inverse_square_metric_1d(self):
        r = np.linspace(0.5, 1.5, 8001)
        grid = ChartGrid([r])
        g = MetricField(grid, (r**-2)[:, None, None])
        gam = christoffel(g)
        assert np.max(np.abs(gam.data[..., 0, 0, 0] + 1.0 / r)) < 1e-6

    def test_symmetry_exact(self, cusp_2d):
        _, geom = cusp_2d
        gam = geom.g.christoffel
        assert np.array_equal(gam.data, np.swapaxes(gam.data, -1, -2))

    def test_degenerate_metric_reports_node(self):
        grid = ChartGrid([np.linspace(0, 1, 8)])
        gl = np.ones(grid.shape + (1, 1))
        gl[3] = -1.0
        with pytest.raises(MetricDegeneracyError) as err:
            MetricField(grid, gl)
        assert err.value.node == (3,)


class TestCovariantDerivative:
    def test_constant_scalar(self, cone_grid):
        grid, g = cone_grid
        du = covariant_derivative(scalar_field(grid, 1.0), g)
        assert np.max(np.abs(du.data)) == 0.0

    def test_flat_hessian_of_x_squared(self):
        grid, g = flat_grid()
        X, _ = grid.coords()
        h = covariant_derivative(covariant_derivative(scalar_field(grid, X**2), g), g)
        expect = np.zeros(grid.shape + (2, 2))
        expect[..., 0, 0] = 2.0
        assert np.max(np.abs(h.data - expect)) < 1e-8

    def test_cone_hessian_includes_christoffel_term(self, cone_grid):
        grid, g = cone_grid
        T = grid.coords()[0]
        h = covariant_derivative(covariant_derivative(scalar_field(grid, T**2), g), g)
        assert np.max(np.abs(h.data[..., 1, 1] - 2.0 * T**2)) < 1e-5

    def test_metric_compatibility(self, cusp_2d):
        _, geom = cusp_2d
        ng = covariant_derivative(geom.g.as_tensor(), geom.g)
        assert np.max(bundle_norm(ng, geom.g).values) < 5e-6

    def test_commutes_with_contraction(self, cusp_2d):
        _, geom = cusp_2d
        rng = np.random.default_rng(3)
        a = TensorField(geom.grid, 1, 1, rng.normal(size=geom.grid.shape + (2, 2)))
        lhs = contract(covariant_derivative(a, geom.g), 1, 1)
        rhs = covariant_derivative(contract(a, 1, 1), geom.g)
        assert np.max(np.abs(lhs.data - rhs.data)) < 1e-6

    def test_valence_overflow(self, cone_grid):
        grid, g = cone_grid
        a = TensorField(grid, 2, 4, np.zeros(grid.shape + (2,) * 6))
        with pytest.raises(ValueError, match="valence"):
            covariant_derivative(a, g)


class TestContractions:
    def test_identity_trace(self, cone_grid):
        grid, g = cone_grid
        eye = TensorField(grid, 1, 1, np.broadcast_to(np.eye(2), grid.shape + (2, 2)).copy())
        assert np.max(np.abs(contract(eye, 1, 1).data - 2.0)) == 0.0

    def test_gstar_g_contraction_gives_identity(self, cone_grid):
        grid, g = cone_grid
        delta = contract(tensor_product(g.inverse_tensor(), g.as_tensor()), 2, 1)
        expect = np.broadcast_to(np.eye(2), grid.shape + (2, 2))
        assert np.max(np.abs(delta.data - expect)) < 1e-12

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 2), st.integers(1, 2))
    def test_contract_matches_index_loop(self, seed, s, t):
        grid = ChartGrid([np.linspace(0, 1, 4), np.linspace(0, 1, 4)])
        rng = np.random.default_rng(seed)
        a = TensorField(grid, 2, 2, rng.normal(size=grid.shape + (2,) * 4))
        got = contract(a, s, t)
        loop = np.zeros(grid.shape + (2, 2))
        for i in range(2):
            for j in range(2):
                for c in range(2):
                    src = [0, 0, 0, 0]
                    src[s - 1] = c
                    src[2 + t - 1] = c
                    free = [k for k in range(4) if k != s - 1 and k != 2 + t - 1]
                    src[free[0]], src[free[1]] = i, j
                    loop[..., i, j] += a.data[(Ellipsis,) + tuple(src)]
        assert np.max(np.abs(got.data - loop)) == 0.0

    def test_contract_position_out_of_range(self, cone_grid):
        grid, g = cone_grid
        with pytest.raises(ValueError, match="out of range"):
            contract(g.as_tensor(), 1, 1)

    def test_complete_contraction_full_trace(self, cone_grid):
        grid, g = cone_grid
        got = complete_contraction(g.inverse_tensor(), g.as_tensor())
        assert np.max(np.abs(got.data - 2.0)) < 1e-12

    def test_complete_contraction_matches_loop(self, cone_grid):
        grid, g = cone_grid
        rng = np.random.default_rng(11)
        a = TensorField(grid, 1, 2, rng.normal(size=grid.shape + (2, 2, 2)))
        b = TensorField(grid, 0, 1, rng.normal(size=grid.shape + (2,)))
        got = complete_contraction(a, b)
        loop = np.einsum("...kij,...k->...ij", a.data, b.data)
        assert np.max(np.abs(got.data - loop)) == 0.0

    def test_scalar_second_factor(self, cone_grid):
        grid, g = cone_grid
        b = scalar_field(grid, 3.0)
        got = complete_contraction(g.as_tensor(), b)
        assert np.max(np.abs(got.data - 3.0 * g.gl)) == 0.0

    def test_overcontraction_rejected(self, cone_grid):
        grid, g = cone_grid
        with pytest.raises(ValueError, match="contract"):
            complete_contraction(g.as_tensor(), g.as_tensor())


class TestBundleNorm:
    def test_inverse_metric_norm(self, cone_grid):
        grid, g = cone_grid
        # |g*| = sqrt(m) from the definition of the bundle metric
        got = bundle_norm(g.inverse_tensor(), g).values
        assert np.max(np.abs(got - np.sqrt(2.0))) < 1e-12

    def test_unit_coordinate_form(self, cone_grid):
        grid, g = cone_grid
        om = TensorField(grid, 0, 1, np.stack([np.ones(grid.shape), np.zeros(grid.shape)], axis=-1))
        assert np.max(np.abs(bundle_norm(om, g).values - 1.0)) == 0.0

    def test_zero_tensor(self, cone_grid):
        grid, g = cone_grid
        z = TensorField(grid, 1, 2, np.zeros(grid.shape + (2,) * 3))
        assert np.max(bundle_norm(z, g).values) == 0.0


class TestIntegrate:
    def test_unit_interval(self):
        grid = ChartGrid([np.linspace(0, 1, 101)])
        g = MetricField(grid, np.ones(grid.shape + (1, 1)))
        assert integrate(scalar_field(grid, 1.0), g, 1.0) == pytest.approx(1.0, abs=1e-14)

    def test_power_l2_norm(self):
        grid = ChartGrid([np.geomspace(1e-5, 1.0, 3000)])
        r = grid.axes[0]
        g = MetricField(grid, np.ones(grid.shape + (1, 1)))
        got = integrate(scalar_field(grid, r), g, 2.0)
        assert got == pytest.approx(3.0**-0.5, abs=1e-6)

    def test_cone_area(self):
        t = np.geomspace(1e-4, 1.0, 500)
        th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        grid = ChartGrid([t, th], periodic=[False, True], periods=[None, 2 * np.pi])
        T, _ = grid.coords()
        gl = np.zeros(grid.shape + (2, 2))
        gl[..., 0, 0] = 1.0
        gl[..., 1, 1] = T**2
        g = MetricField(grid, gl)
        assert integrate(scalar_field(grid, 1.0), g, 1.0) == pytest.approx(np.pi, abs=1e-6)

    def test_second_order_convergence(self):
        errs = []
        for n in (64, 128, 256):
            grid = ChartGrid([np.linspace(0, 1, n + 1) ** 1.5])  # graded, non-uniform
            g = MetricField(grid, np.ones(grid.shape + (1, 1)))
            got = integrate(scalar_field(grid, np.exp(grid.axes[0])), g, 1.0)
            errs.append(abs(got - (np.e - 1.0)))
        orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert all(1.8 <= o <= 2.2 for o in orders)

    def test_rejects_q_below_one(self):
        grid = ChartGrid([np.linspace(0, 1, 8)])
        g = MetricField(grid, np.ones(grid.shape + (1, 1)))
        with pytest.raises(ValueError):
            integrate(scalar_field(grid, 1.0), g, 0.5)


class TestConformalRescale:
    def test_unit_factor_identity(self, cone_grid):
        grid, g = cone_grid
        gh = conformal_rescale(g, scalar_field(grid, 1.0))
        assert np.array_equal(gh.gl, g.gl)

    def test_volume_scaling(self, cone_grid):
        grid, g = cone_grid
        rho = scalar_field(grid, 0.5)
        gh = conformal_rescale(g, rho)
        assert np.allclose(gh.sqrt_det, 4.0 * g.sqrt_det, rtol=1e-14)

    def test_one_form_norm_scaling(self, cone_grid):
        grid, g = cone_grid
        T = grid.coords()[0]
        rho = scalar_field(grid, T)
        gh = conformal_rescale(g, rho)
        om = TensorField(grid, 0, 1, np.stack([np.sin(T), np.cos(T)], axis=-1))
        assert np.allclose(bundle_norm(om, gh).values, T * bundle_norm(om, g).values, rtol=1e-13)

    def test_rejects_nonpositive_factor(self, cone_grid):
        grid, g = cone_grid
        with pytest.raises(ValueError):
            conformal_rescale(g, scalar_field(grid, 0.0 * grid.coords()[0]))


class TestPullback:
    def test_identity_map(self, cone_grid):
        grid, g = cone_grid
        a = g.as_tensor()
        back = pullback(identity_map(grid), a)
        assert np.max(np.abs(back.data - a.data)) < 1e-10

    def test_arclength_pulls_flat_metric_to_cusp_metric(self):
        R = make_characteristic("power", alpha=2.0)
        am = ArclengthMap(R)
        s = np.linspace(0.0, 4.0, 401)
        sgrid = ChartGrid([s])
        tgrid = ChartGrid([am.inverse(s)[::-1]])
        ds2 = MetricField(tgrid, np.ones(tgrid.shape + (1, 1)))  # placeholder target grid metric

        # map s -> t(s); pull ds^2 on the target back to dr^2 / R^2
        flat = MetricField(sgrid, np.ones(sgrid.shape + (1, 1)))
        fm = GridMap(
            tgrid,
            sgrid,
            lambda t: (am(np.clip(t, tgrid.axes[0][0], 1.0)),),
            lambda t: (-1.0 / R(t))[..., None, None],
        )
        got = pullback(fm, flat.as_tensor())
        expect = (1.0 / R(tgrid.axes[0]) ** 2)[:, None, None]
        assert np.max(np.abs(got.data - expect)) < 1e-8

    def test_scalar_pullback_is_composition(self, cone_grid):
        grid, g = cone_grid
        u = scalar_field(grid, np.sin(grid.coords()[0]))
        back = pullback(identity_map(grid), u)
        assert np.max(np.abs(back.data - u.data)) < 1e-13

    def test_composition_law(self):
        x = np.linspace(0.0, 1.0, 65)
        grid = ChartGrid([x])
        shift = 0.25

        def mkmap(src, dst, c):
            return GridMap(src, dst, lambda t: (t + c,), lambda t: np.ones(t.shape + (1, 1)))

        g2 = ChartGrid([x + shift])
        g3 = ChartGrid([x + 2 * shift])
        F = mkmap(g2, g3, shift)
        G = mkmap(grid, g2, shift)
        FG = mkmap(grid, g3, 2 * shift)
        u = TensorField(g3, 0, 1, np.sin(2.1 * g3.axes[0])[:, None])
        lhs = pullback(FG, u)
        rhs = pullback(G, pullback(F, u))
        assert np.max(np.abs(lhs.data - rhs.data)) < 1e-9

    def test_singular_jacobian_rejected(self, cone_grid):
        grid, g = cone_grid
        bad = GridMap(grid, grid, lambda *xs: xs, lambda *xs: np.zeros(xs[0].shape + (2, 2)))
        with pytest.raises(ValueError, match="Jacobian"):
            pullback(bad, g.as_tensor())

    def test_isometry_naturality(self):
        # arclength isometry: pullback(hat-nabla omega) = nabla(pullback omega),
        # residual measured in the invariant bundle norm of dr^2/R^2
        R = make_characteristic("power", alpha=2.0)
        cusp_s = np.linspace(0.0, 4.0, 3201)
        am = ArclengthMap(R)
        t_nodes = am.inverse(cusp_s)[::-1]
        tgrid = ChartGrid([t_nodes])
        sgrid = ChartGrid([cusp_s])
        ghat_t = MetricField(tgrid, (1.0 / R(t_nodes) ** 2)[:, None, None])  # dr^2/R^2
        flat_s = MetricField(sgrid, np.ones(sgrid.shape + (1, 1)))

        om_s = TensorField(sgrid, 0, 1, (np.sin(1.3 * cusp_s) * np.exp(-0.3 * cusp_s))[:, None])
        fm = GridMap(
            tgrid,
            sgrid,
            lambda t: (am(np.clip(t, t_nodes[0], 1.0)),),
            lambda t: (-1.0 / R(t))[..., None, None],
        )
        lhs = pullback(fm, covariant_derivative(om_s, flat_s))
        rhs = covariant_derivative(pullback(fm, om_s), ghat_t)
        resid = bundle_norm(lhs - rhs, ghat_t).values
        assert np.max(resid[4:-4]) < 1e-5


def test_field_csv_roundtrip(tmp_path, cone_grid):
    grid, g = cone_grid
    path = tmp_path / "field.csv"
    field_to_csv(g.as_tensor(), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,u_11,u_12,u_21,u_22"
    assert len(lines) == grid.size + 1
