import numpy as np
import pytest

from cuspfs.characteristics import make_characteristic
from cuspfs.cusps import (
    CuspBase,
    build_model_cusp,
    glue_cusp,
    metric_equivalence_ratio,
    scaled_log_gradient_bound,
    singularity_bound,
    smoothstep,
)
from cuspfs.geometry import MetricField, scalar_field
from cuspfs.grid import ChartGrid


class TestConstruction:
    def test_cone_requires_linear_characteristic(self):
        R2 = make_characteristic("power", alpha=2.0)
        with pytest.raises(ValueError, match="alpha = 1"):
            build_model_cusp(R2, CuspBase("circle"), "cone")

    def test_base_validation(self):
        with pytest.raises(ValueError):
            CuspBase("arc", theta0=1.0, theta1=1.0)
        with pytest.raises(ValueError):
            CuspBase("points", points=())
        with pytest.raises(ValueError):
            CuspBase("torus")

    def test_r_z_stays_in_unit_interval(self, cusp_2d):
        cusp, geom = cusp_2d
        st = cusp.stretched_geometry(4.0, 100, 8)
        r = cusp.r_z(st.grid)
        assert np.all((r > 0) & (r <= 1))

    def test_dict_spec_construction(self):
        mc = build_model_cusp(
            {"kind": "power", "alpha": 1.5}, {"kind": "arc", "theta0": 0.0, "theta1": 1.0}, "cusp"
        )
        assert mc.m == 2


class TestMetrics:
    def test_cone_metric_equals_embedding_exactly(self):
        cone = build_model_cusp(make_characteristic("power", alpha=1.0), CuspBase("circle"), "cone")
        st = cone.stretched_geometry(4.0, 200, 24)
        lo, hi = metric_equivalence_ratio(st.g, cone.embedding_metric(st.grid))
        assert abs(lo - 1.0) < 1e-12 and abs(hi - 1.0) < 1e-12

    def test_cusp_equivalence_ratio_closed_form(self, cusp_2d):
        cusp, _ = cusp_2d
        st = cusp.stretched_geometry(4.0, 200, 24)
        lo, hi = metric_equivalence_ratio(st.g, cusp.embedding_metric(st.grid))
        assert lo == pytest.approx(1.0, abs=1e-9)
        assert hi == pytest.approx(5.0, abs=1e-6)  # 1 + max 4 t^2 at t = 1

    def test_identical_metrics_give_unit_ratio(self, cusp_2d):
        _, geom = cusp_2d
        lo, hi = metric_equivalence_ratio(geom.g, geom.g)
        assert lo == pytest.approx(1.0, abs=1e-13) and hi == pytest.approx(1.0, abs=1e-13)

    def test_desingularized_cylinder_metric_is_product(self, cusp_2d):
        # in arclength coordinates g-hat has exactly the components of ds^2 + g_B
        _, geom = cusp_2d
        eye = np.broadcast_to(np.eye(2), geom.grid.shape + (2, 2))
        assert np.max(np.abs(geom.ghat.gl - eye)) < 1e-10

    def test_stretched_ghat_matches_conformal_rescale(self, cusp_2d):
        cusp, _ = cusp_2d
        st = cusp.stretched_geometry(4.0, 150, 16)
        t = st.grid.coords()[0]
        assert np.max(np.abs(st.ghat.gl[..., 0, 0] - 1.0 / cusp.R(t) ** 2)) < 1e-9

    def test_arclength_gridmap_roundtrip(self, cusp_1d):
        cusp, geom = cusp_1d
        st = cusp.stretched_geometry(6.0, geom.grid.shape[0])
        fm = cusp.arclength_gridmap(geom, st)
        t_mapped = fm.func(*geom.grid.coords())[0]
        assert np.max(np.abs(np.sort(t_mapped) - st.grid.axes[0])) < 1e-11


class TestSingularityBounds:
    def test_flat_interval_log_weight(self):
        r = np.linspace(0.25, 1.0, 8001)
        grid = ChartGrid([r])
        g = MetricField(grid, np.ones(grid.shape + (1, 1)))
        rho = scalar_field(grid, r)
        assert scaled_log_gradient_bound(rho, g, 0) == pytest.approx(1.0, abs=1e-6)
        assert scaled_log_gradient_bound(rho, g, 1) == pytest.approx(1.0, abs=1e-3)

    def test_power_bound_at_most_alpha(self, cusp_1d):
        cusp, geom = cusp_1d
        b0 = singularity_bound(geom, 0)
        assert b0 <= cusp.R.params["alpha"] * 1.02
        assert b0 == pytest.approx(cusp.R.params["alpha"], rel=0.02)

    def test_refinement_stability(self, cusp_1d):
        cusp, _ = cusp_1d
        vals = [singularity_bound(cusp.cylinder_geometry(6.0, ns), 2) for ns in (769, 1537)]
        assert abs(vals[1] - vals[0]) / vals[0] < 0.05

    def test_order_cap(self, cusp_1d):
        _, geom = cusp_1d
        with pytest.raises(ValueError):
            singularity_bound(geom, 4)


class TestGlue:
    def test_smoothstep_endpoints(self):
        x = np.array([0.0, 1.0])
        assert np.allclose(smoothstep(x), [0.0, 1.0])
        h = 1e-4
        probes = np.array([h, 1.0 - h])
        # three vanishing derivatives at both ends: values stay at h^4 scale
        assert smoothstep(probes[0]) < 1e-12
        assert 1.0 - smoothstep(probes[1]) < 1e-12

    def test_exact_regions_and_monotonicity(self, cusp_2d):
        cusp, _ = cusp_2d
        gg = glue_cusp(cusp, 0.25, 0.5, smax=5.0, ns=300, ntheta=16)
        t = gg.grid.axes[0]
        rv = gg.rho.values
        assert np.max(np.abs(rv[t <= 0.25] - cusp.R(t[t <= 0.25])[:, None])) == 0.0
        assert np.max(np.abs(rv[t >= 0.5] - 1.0)) == 0.0
        assert np.all(np.diff(rv[:, 0]) >= -1e-12)

    def test_blended_metric_matches_ends(self, cusp_2d):
        cusp, _ = cusp_2d
        gg = glue_cusp(cusp, 0.25, 0.5, smax=5.0, ns=300, ntheta=16)
        t = gg.grid.axes[0]
        inner = t <= 0.25
        assert np.max(np.abs(gg.g.gl[inner][..., 1, 1] - (cusp.R(t[inner]) ** 2)[:, None])) == 0.0
        assert np.all(gg.ghat.gl[..., 0, 0] > 0)

    def test_misordered_radii_rejected(self, cusp_2d):
        cusp, _ = cusp_2d
        with pytest.raises(ValueError, match="blend radii"):
            glue_cusp(cusp, 0.5, 0.25)

    def test_sampled_characteristic_through_the_pipeline(self):
        # a user-supplied profile close to t^1.5 drives the full chain:
        # certification, arclength, cylinder chart, weighted norm
        t = np.geomspace(1e-6, 1.0, 512)
        R = make_characteristic("sampled", t=t, r=t**1.5)
        mc = build_model_cusp(R, CuspBase("points"), "cusp")
        geom = mc.cylinder_geometry(smax=4.0, ns=257)
        assert np.all(geom.rho.values > 0) and np.all(geom.rho.values <= 1 + 1e-12)
        from cuspfs.weighted import WeightedNormSpec, weighted_sobolev_norm

        u = scalar_field(geom.grid, geom.rho.values)
        val = weighted_sobolev_norm(u, geom.g, WeightedNormSpec(1, 0.0, 2.0, geom.rho))
        assert np.isfinite(val) and val > 0

    def test_outer_metric_override(self, cusp_2d):
        cusp, _ = cusp_2d

        def outer(t, th):
            gl = np.zeros(t.shape + (2, 2))
            gl[..., 0, 0] = 2.0
            gl[..., 1, 1] = 1.0
            return gl

        gg = glue_cusp(cusp, 0.25, 0.5, outer_metric=outer, smax=5.0, ns=300, ntheta=16)
        t = gg.grid.axes[0]
        assert np.max(np.abs(gg.g.gl[t >= 0.5][..., 0, 0] - 2.0)) == 0.0
