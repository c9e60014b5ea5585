import numpy as np
import pytest

from cuspfs.characteristics import make_characteristic
from cuspfs.cusps import CuspBase, build_model_cusp
from cuspfs.geometry import MetricField
from cuspfs.grid import ChartGrid


@pytest.fixture(scope="session")
def cone_grid():
    """Polar grid with the cone metric dt^2 + t^2 dtheta^2 on [0.1, 1] x S^1."""
    t = np.linspace(0.1, 1.0, 201)
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    grid = ChartGrid([t, th], periodic=[False, True], periods=[None, 2 * np.pi])
    T, _ = grid.coords()
    gl = np.zeros(grid.shape + (2, 2))
    gl[..., 0, 0] = 1.0
    gl[..., 1, 1] = T**2
    return grid, MetricField(grid, gl)


@pytest.fixture(scope="session")
def cusp_1d():
    """K(R_2, point): a cusp curve, cylinder chart with 1537 nodes."""
    R = make_characteristic("power", alpha=2.0)
    cusp = build_model_cusp(R, CuspBase("points"), "cusp")
    return cusp, cusp.cylinder_geometry(smax=6.0, ns=1537)


@pytest.fixture(scope="session")
def cone_1d():
    R = make_characteristic("power", alpha=1.0)
    cusp = build_model_cusp(R, CuspBase("points"), "cone")
    return cusp, cusp.cylinder_geometry(smax=6.0, ns=1537)


@pytest.fixture(scope="session")
def cusp_2d():
    """K(R_2, S^1): surface-of-revolution cusp, cylinder chart."""
    R = make_characteristic("power", alpha=2.0)
    cusp = build_model_cusp(R, CuspBase("circle"), "cusp")
    return cusp, cusp.cylinder_geometry(smax=5.0, ns=385, ntheta=24)


@pytest.fixture(scope="session")
def cone_2d_fine():
    """Cone over the circle at a resolution fit for 1e-5 identity checks."""
    R = make_characteristic("power", alpha=1.0)
    cone = build_model_cusp(R, CuspBase("circle"), "cone")
    return cone.cylinder_geometry(smax=5.0, ns=4097, ntheta=16)
