"""Model cusps Z(R, B), their stretched and desingularized charts, and gluing.

A model cusp is a cone C(B) or cusp K(R, B) over a compact base.  In the
stretched chart (t, b) its metric is dt^2 + R(t)^2 g_B; substituting the
arclength coordinate s with ds = -dt/R turns the conformally rescaled metric
g_Z / r_Z^2 into the product metric ds^2 + g_B on a half-infinite cylinder.
All field computations happen on one of these two charts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .characteristics import ArclengthMap, CuspCharacteristic, make_characteristic
from .geometry import (
    GridMap,
    MetricField,
    ScalarField,
    bundle_norm,
    conformal_rescale,
    covariant_derivative,
    generalized_eig_bounds,
    scalar_field,
)
from .grid import ChartGrid

__all__ = [
    "CuspBase",
    "ModelCusp",
    "CuspGeometry",
    "GluedGeometry",
    "build_model_cusp",
    "metric_equivalence_ratio",
    "singularity_bound",
    "scaled_log_gradient_bound",
    "glue_cusp",
    "smoothstep",
]


@dataclass(frozen=True)
class CuspBase:
    """Compact base manifold of a model cusp: circle, circular arc, or points."""

    kind: str  # "circle" | "arc" | "points"
    theta0: float = 0.0
    theta1: float = 2.0 * np.pi
    points: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if self.kind not in ("circle", "arc", "points"):
            raise ValueError(f"unknown base kind {self.kind!r}")
        if self.kind == "arc" and not self.theta1 > self.theta0:
            raise ValueError("arc base needs positive length")
        if self.kind == "points" and len(self.points) < 1:
            raise ValueError("point base must be nonempty")

    @property
    def dim(self) -> int:
        return 0 if self.kind == "points" else 1


@dataclass
class CuspGeometry:
    """A working chart carrying the singular data (grid, rho, g, g-hat).

    `outer_first` says whether index 0 along axis 0 is the outer (regular)
    edge of the manifold; the opposite end faces the singularity / truncation.
    """

    grid: ChartGrid
    rho: ScalarField
    g: MetricField
    ghat: MetricField
    outer_first: bool = True
    s: np.ndarray | None = None
    t_of_s: np.ndarray | None = None
    cusp: "ModelCusp | None" = None

    @property
    def m(self) -> int:
        return self.grid.ndim

    def weight(self, lam: float) -> np.ndarray:
        return self.rho.values**lam


class ModelCusp:
    """Cone or cusp over a compact base with its stretched-chart data."""

    def __init__(self, R: CuspCharacteristic, base: CuspBase, flavor: str, epsilon: float = 1.0):
        if flavor not in ("cone", "cusp"):
            raise ValueError(f"unknown cusp flavor {flavor!r}")
        if flavor == "cone" and not (R.kind == "power" and abs(R.params.get("alpha", 0.0) - 1.0) < 1e-14):
            raise ValueError("a cone requires the power characteristic with alpha = 1")
        if not 0 < epsilon <= 1:
            raise ValueError("radius cap must lie in (0, 1]")
        self.R = R
        self.base = base
        self.flavor = flavor
        self.epsilon = epsilon
        self._arclength: ArclengthMap | None = None

    @property
    def m(self) -> int:
        return self.base.dim + 1

    @property
    def arclength(self) -> ArclengthMap:
        if self._arclength is None:
            self._arclength = ArclengthMap(self.R)
        return self._arclength

    # -- charts -------------------------------------------------------------
    def _theta_axis(self, ntheta: int):
        if self.base.kind == "circle":
            theta = np.linspace(0.0, 2.0 * np.pi, ntheta, endpoint=False)
            return theta, True, 2.0 * np.pi
        theta = np.linspace(self.base.theta0, self.base.theta1, ntheta)
        return theta, False, None

    def cylinder_geometry(self, smax: float, ns: int, ntheta: int = 32) -> CuspGeometry:
        """Desingularized chart: uniform s in [0, smax], g-hat = ds^2 + g_B."""
        s = np.linspace(0.0, smax, ns)
        t_of_s = self.arclength.inverse(s)
        rho_vals = self.R(t_of_s)
        m = self.m
        if m == 1:
            grid = ChartGrid([s])
            rho = rho_vals
        else:
            theta, per, period = self._theta_axis(ntheta)
            grid = ChartGrid([s, theta], periodic=[False, per], periods=[None, period])
            rho = np.broadcast_to(rho_vals[:, None], grid.shape).copy()
        eye = np.broadcast_to(np.eye(m), grid.shape + (m, m)).copy()
        ghat = MetricField(grid, eye, gu=eye.copy(), sqrt_det=np.ones(grid.shape), validate=False)
        rho_f = scalar_field(grid, rho)
        g = conformal_rescale(ghat, scalar_field(grid, 1.0 / rho_f.values))  # g = rho^2 ghat
        return CuspGeometry(grid, rho_f, g, ghat, outer_first=True, s=s, t_of_s=t_of_s, cusp=self)

    def stretched_geometry(self, smax: float, ns: int, ntheta: int = 32) -> CuspGeometry:
        """Stretched chart (t, b): metric dt^2 + R(t)^2 g_B on a graded t-grid."""
        s = np.linspace(0.0, smax, ns)
        t = self.arclength.inverse(s)[::-1]  # ascending, geometric-like grading
        m = self.m
        if m == 1:
            grid = ChartGrid([t])
        else:
            theta, per, period = self._theta_axis(ntheta)
            grid = ChartGrid([t, theta], periodic=[False, per], periods=[None, period])
        gl = self._stretched_metric_components(grid)
        g = MetricField(grid, gl)
        rvals = self.r_z(grid)
        rho = scalar_field(grid, rvals)
        ghat = conformal_rescale(g, rho)
        return CuspGeometry(grid, rho, g, ghat, outer_first=False, s=s[::-1], t_of_s=t, cusp=self)

    def _stretched_metric_components(self, grid: ChartGrid) -> np.ndarray:
        m = self.m
        t = grid.coords()[0]
        gl = np.zeros(grid.shape + (m, m))
        gl[..., 0, 0] = 1.0
        if m == 2:
            gl[..., 1, 1] = self.R(t) ** 2
        return gl

    def r_z(self, grid: ChartGrid) -> np.ndarray:
        """Singularity function on the stretched chart: |x| for cones, R(t) else."""
        t = grid.coords()[0]
        return np.asarray(self.R(t)) if self.flavor == "cusp" else t.copy()

    def embedding_metric(self, grid: ChartGrid) -> MetricField:
        """First fundamental form of the ambient embedding, in closed form."""
        m = self.m
        t = grid.coords()[0]
        gl = np.zeros(grid.shape + (m, m))
        if self.flavor == "cone":
            gl[..., 0, 0] = 1.0
            if m == 2:
                gl[..., 1, 1] = t**2
        else:
            bnorm = max(abs(p) for p in self.base.points) if self.base.kind == "points" else 1.0
            gl[..., 0, 0] = 1.0 + (self.R.deriv(t, 1) * bnorm) ** 2
            if m == 2:
                gl[..., 1, 1] = self.R(t) ** 2
        return MetricField(grid, gl)

    def arclength_gridmap(self, cyl: CuspGeometry, stretched: CuspGeometry) -> GridMap:
        """Map (s, b) -> (t(s), b) from the cylinder chart to the stretched chart."""

        def func(*coords):
            svals = coords[0]
            t = self.arclength.inverse(np.clip(svals.ravel(), 0.0, None)).reshape(svals.shape)
            return (t,) + tuple(coords[1:])

        def jac(*coords):
            svals = coords[0]
            t = self.arclength.inverse(np.clip(svals.ravel(), 0.0, None)).reshape(svals.shape)
            m = cyl.grid.ndim
            J = np.zeros(svals.shape + (m, m))
            J[..., 0, 0] = -self.R(t)  # dt/ds
            for i in range(1, m):
                J[..., i, i] = 1.0
            return J

        return GridMap(cyl.grid, stretched.grid, func, jac)


def build_model_cusp(R, base, flavor: str, epsilon: float = 1.0) -> ModelCusp:
    """Construct a model cusp; accepts a characteristic or (kind, params) spec."""
    if isinstance(R, dict):
        R = make_characteristic(**R)
    if isinstance(base, dict):
        base = CuspBase(**base)
    return ModelCusp(R, base, flavor, epsilon)


def metric_equivalence_ratio(g1: MetricField, g2: MetricField, sample=None) -> tuple[float, float]:
    """Extreme generalized eigenvalues of g2 relative to g1 over sample nodes."""
    if not g1.grid.same_as(g2.grid):
        raise ValueError("metrics live on different grids")
    A, B = g2.gl, g1.gl
    if sample is not None:
        A = A[sample]
        B = B[sample]
    lo, hi = generalized_eig_bounds(A, B)
    return float(np.min(lo)), float(np.max(hi))


def scaled_log_gradient_bound(rho: ScalarField, g: MetricField, k: int) -> float:
    """Grid max of rho^(k+1) |nabla^k d(log rho)|, the weight-regularity number."""
    if k > 3:
        raise ValueError("valence cap: scaled log-gradient bounds available for k <= 3")
    grid = rho.grid
    logr = scalar_field(grid, np.log(rho.values))
    fld = covariant_derivative(logr, g)
    for _ in range(k):
        fld = covariant_derivative(fld, g)
    nrm = bundle_norm(fld, g).values
    return float(np.max(rho.values ** (k + 1) * nrm))


def singularity_bound(geom: CuspGeometry, k: int) -> float:
    """Def-style check that the singularity function has rho-weighted log bounds."""
    return scaled_log_gradient_bound(geom.rho, geom.g, k)


def smoothstep(x: np.ndarray) -> np.ndarray:
    """Monotone 0-to-1 spline with three vanishing derivatives at both ends."""
    x = np.clip(x, 0.0, 1.0)
    return x**4 * (35.0 - 84.0 * x + 70.0 * x**2 - 20.0 * x**3)


@dataclass
class GluedGeometry(CuspGeometry):
    """Cusp glued to an outer region on the stretched chart (outer edge at t=1)."""

    omega: np.ndarray | None = None
    eps0: float = 0.25
    eps1: float = 0.5


def glue_cusp(
    model: ModelCusp,
    eps0: float = 0.25,
    eps1: float = 0.5,
    outer_metric=None,
    smax: float = 6.0,
    ns: int = 512,
    ntheta: int = 32,
) -> GluedGeometry:
    """Blend the model cusp into an outer region across [eps0, eps1].

    Below eps0 the weight is r_Z and the metric is g_Z exactly; above eps1 the
    weight is 1 and the metric is the caller's outer metric (default: the
    continuation of the model metric).  The blend is the C^3 smoothstep.
    """
    if not 0 < eps0 < eps1 < model.epsilon + 1e-15:
        raise ValueError("blend radii must satisfy 0 < eps0 < eps1 < epsilon")
    st = model.stretched_geometry(smax, ns, ntheta)
    grid = st.grid
    t = grid.coords()[0]
    om = smoothstep((t - eps0) / (eps1 - eps0))
    rho_bar = (1.0 - om) * st.rho.values + om
    g_outer = st.g.gl if outer_metric is None else np.asarray(outer_metric(*grid.coords()), dtype=float)
    gl_bar = (1.0 - om)[..., None, None] * st.g.gl + om[..., None, None] * g_outer
    g_bar = MetricField(grid, gl_bar)
    rho_f = scalar_field(grid, rho_bar)
    ghat = conformal_rescale(g_bar, rho_f)
    return GluedGeometry(
        grid,
        rho_f,
        g_bar,
        ghat,
        outer_first=False,
        s=st.s,
        t_of_s=st.t_of_s,
        cusp=model,
        omega=om,
        eps0=eps0,
        eps1=eps1,
    )
