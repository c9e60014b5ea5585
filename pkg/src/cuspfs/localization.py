"""Atlases and localization systems on the truncated desingularized cylinder.

Charts are axis-aligned boxes of side 2 translated along the cylinder axes,
so all transition maps are translations and the uniform-regularity bounds are
trivial.  The subordinate partition of unity is built from the fixed
polynomial bump (1 - x^2)^4; the squares of the normalized bumps sum to one.
A single cutoff profile equal to 1 on every pushed bump support (up to a
quantified 1e-8-level tail) closes the retraction-coretraction pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ScalarField, scalar_field
from .grid import ChartGrid

__all__ = [
    "Chart",
    "UrAtlas",
    "LocalField",
    "LocalizationSystem",
    "build_cylinder_atlas",
    "build_localization",
    "coretract",
    "retract",
    "localized_norm",
    "flat_box_norm",
]

BUMP_SUPPORT = 1.0  # the bump (1 - x^2)^4 is supported on the whole box
CHI_PLATEAU = 0.95  # cutoff is exactly 1 inside this radius


def _bump(xi: np.ndarray) -> np.ndarray:
    """The fixed chart bump (1 - xi^2)^4 on (-1, 1), scaled support."""
    y = np.clip(np.abs(xi) / BUMP_SUPPORT, 0.0, 1.0)
    return (1.0 - y**2) ** 4


def _chi_profile(xi: np.ndarray) -> np.ndarray:
    """Cutoff: 1 on [-CHI_PLATEAU, CHI_PLATEAU], smooth to 0 at the box edge."""
    y = np.clip((np.abs(xi) - CHI_PLATEAU) / (1.0 - CHI_PLATEAU), 0.0, 1.0)
    s = y**4 * (35.0 - 84.0 * y + 70.0 * y**2 - 20.0 * y**3)
    return 1.0 - s


@dataclass(frozen=True)
class Chart:
    """A translated unit box: normalized image is the box minus its center."""

    id: int
    center: tuple[float, ...]
    lo: tuple[float, ...]  # physical box corners after clipping to the manifold
    hi: tuple[float, ...]
    boundary: tuple[bool, ...]  # axis was clipped (half-box flavor)


@dataclass(frozen=True)
class UrAtlas:
    """Axis-aligned box atlas of the truncated cylinder [0, s_max] (x base)."""

    charts: tuple[Chart, ...]
    overlap: float
    s_max: float
    ndim: int
    theta_period: float | None = None
    multiplicity: int = 0

    def __len__(self):
        return len(self.charts)


def _axis_centers(length: float, spacing: float, closed: bool = False) -> np.ndarray:
    # on a closed circle the count is rounded: the effective shrink radius may
    # grow slightly, which Def-style shrinkability permits (any radius < 1)
    n = int(np.round(length / spacing)) if closed else int(np.ceil(length / spacing))
    n = max(n, 4 if closed else 1)
    return (np.arange(n) + 0.5) * (length / n)


def build_cylinder_atlas(
    s_max: float,
    overlap: float,
    ndim: int = 1,
    theta_period: float | None = 2.0 * np.pi,
    theta_span: tuple[float, float] | None = None,
) -> UrAtlas:
    """Cover [0, s_max] (optionally x a circle or arc) with unit boxes.

    Center spacing is min(2 * overlap, 1), so the overlap-shrunk boxes cover
    the cylinder with room to spare; any point lies in at most
    ceil(2/spacing) boxes per axis (2 per axis once overlap >= 0.5).
    An arc base (theta_span) gets clipped boundary boxes like the s-axis.
    """
    if s_max <= 2:
        raise ValueError("cylinder too short: need s_max > 2")
    if not 0.3 < overlap < 0.9:
        raise ValueError("overlap fraction must lie in (0.3, 0.9)")
    d = min(2.0 * overlap, 1.0)
    s_centers = _axis_centers(s_max, d)
    axes_centers = [s_centers]
    arc = None
    if ndim == 2:
        if theta_span is not None:
            arc = (float(theta_span[0]), float(theta_span[1]))
            axes_centers.append(arc[0] + _axis_centers(arc[1] - arc[0], d))
            theta_period = None
        elif theta_period is not None:
            axes_centers.append(_axis_centers(theta_period, d, closed=True))
        else:
            raise ValueError("2-D atlas needs the base circle period or an arc span")
    charts = []
    cid = 0
    for idx in np.ndindex(*[len(c) for c in axes_centers]):
        center, lo, hi, bflag = [], [], [], []
        for ax, i in enumerate(idx):
            c = axes_centers[ax][i]
            center.append(c)
            if ax == 0 or arc is not None:
                left, right = (0.0, s_max) if ax == 0 else arc
                lo.append(max(c - 1.0, left))
                hi.append(min(c + 1.0, right))
                bflag.append(c - 1.0 < left or c + 1.0 > right)
            else:
                lo.append(c - 1.0)  # theta boxes wrap, never clipped
                hi.append(c + 1.0)
                bflag.append(False)
        charts.append(Chart(cid, tuple(center), tuple(lo), tuple(hi), tuple(bflag)))
        cid += 1
    mult = 1
    for ax, centers in enumerate(axes_centers):
        span = centers[1] - centers[0] if len(centers) > 1 else 2.0
        mult *= int(np.ceil(2.0 / span - 1e-12))
    return UrAtlas(tuple(charts), overlap, s_max, len(axes_centers), theta_period if ndim == 2 else None, mult)


@dataclass
class _BoundChart:
    chart: Chart
    idx: tuple[np.ndarray, ...]  # per-axis node indices into the global grid
    local_grid: ChartGrid
    xi: tuple[np.ndarray, ...]  # normalized local coordinates per axis
    pi: np.ndarray  # normalized bump on the local nodes
    chi: np.ndarray  # cutoff sampled on the local nodes


@dataclass
class LocalizationSystem:
    """Partition of unity pi_k (sum of squares = 1) bound to a cylinder grid."""

    atlas: UrAtlas
    grid: ChartGrid
    bound: list[_BoundChart] = field(default_factory=list)

    def pi_field(self, k: int) -> np.ndarray:
        """Global-grid array of pi_k (zero off the chart)."""
        out = np.zeros(self.grid.shape)
        bc = self.bound[k]
        if bc.local_grid is not None:
            out[np.ix_(*bc.idx)] = bc.pi
        return out


def _chart_axis_nodes(grid: ChartGrid, atlas: UrAtlas, chart: Chart, ax: int):
    x = grid.axes[ax]
    if ax >= 1 and grid.periodic[ax]:
        period = grid.periods[ax]
        rel = np.mod(x - chart.center[ax] + period / 2.0, period) - period / 2.0
        mask = np.abs(rel) <= 1.0
        idx = np.nonzero(mask)[0]
        # order nodes by their position inside the box so coords are increasing
        order = np.argsort(rel[idx], kind="stable")
        idx = idx[order]
        coords = rel[idx] + chart.center[ax]
        return idx, coords, rel[idx]
    mask = (x >= chart.lo[ax] - 1e-12) & (x <= chart.hi[ax] + 1e-12)
    idx = np.nonzero(mask)[0]
    if 0 < idx.size < 4 <= x.size:
        # sliver slice: widen the window so the box grid stays differentiable
        lo = max(0, min(int(idx[0]), x.size - 4))
        idx = np.arange(lo, lo + 4)
    return idx, x[idx], x[idx] - chart.center[ax]


def build_localization(atlas: UrAtlas, grid: ChartGrid) -> LocalizationSystem:
    """Bind the atlas to a grid: bumps, normalized partition, cutoffs."""
    if grid.ndim != atlas.ndim:
        raise ValueError("atlas and grid dimensions differ")
    sys = LocalizationSystem(atlas, grid)
    sumsq = np.zeros(grid.shape)
    raw = []
    for chart in atlas.charts:
        idx, coords, xi = [], [], []
        for ax in range(grid.ndim):
            i, c, x = _chart_axis_nodes(grid, atlas, chart, ax)
            idx.append(i)
            coords.append(c)
            xi.append(x)
        if any(i.size == 0 for i in idx):  # chart misses the discrete domain
            empty = np.zeros((0,) * grid.ndim)
            raw.append((chart, tuple(idx), None, tuple(xi), empty, empty))
            continue
        b = _bump(xi[0][:, None] if grid.ndim == 2 else xi[0])
        chi = _chi_profile(xi[0][:, None] if grid.ndim == 2 else xi[0])
        if grid.ndim == 2:
            b = b * _bump(xi[1][None, :])
            chi = chi * _chi_profile(xi[1][None, :])
        local = ChartGrid(coords)
        raw.append((chart, tuple(idx), local, tuple(xi), b, chi))
        sumsq[np.ix_(*idx)] += b**2
    if np.any(sumsq <= 0.0):
        node = np.argwhere(sumsq <= 0.0)[0]
        raise ValueError(f"uncovered node {tuple(int(i) for i in node)}: bump supports do not cover the grid")
    for chart, idx, local, xi, b, chi in raw:
        pi = b / np.sqrt(sumsq[np.ix_(*idx)]) if local is not None else b
        sys.bound.append(_BoundChart(chart, idx, local, xi, pi, chi))
    return sys


@dataclass
class LocalField:
    """A chart-local sample array, implicitly zero-extended off the box."""

    chart_id: int
    data: np.ndarray


def coretract(u: ScalarField, sys: LocalizationSystem) -> list[LocalField]:
    """Push pi_k u to every chart box: the coretraction family."""
    vals = u.values
    out = []
    for bc in sys.bound:
        if bc.local_grid is None:
            out.append(LocalField(bc.chart.id, bc.pi.copy()))
            continue
        out.append(LocalField(bc.chart.id, bc.pi * vals[np.ix_(*bc.idx)]))
    return out


def retract(family: list[LocalField], sys: LocalizationSystem) -> ScalarField:
    """Sum of pi_k (chi v_k) pulled back from the chart boxes."""
    if len(family) != len(sys.bound):
        raise ValueError("family size does not match the atlas")
    out = np.zeros(sys.grid.shape)
    for lf in family:
        bc = sys.bound[lf.chart_id]
        if lf.data.shape != bc.pi.shape:
            raise ValueError(f"chart {lf.chart_id}: local field shape mismatch")
        if bc.local_grid is None:
            continue
        np.add.at(out, np.ix_(*bc.idx), bc.pi * bc.chi * lf.data)
    return scalar_field(sys.grid, out)


def flat_box_norm(data: np.ndarray, grid: ChartGrid, k: int, q: float) -> float:
    """Euclidean W_q^k norm of a local sample array on its box grid."""
    total = 0.0
    w = grid.cell_weights()
    layer = [data]
    for j in range(k + 1):
        if j:
            layer = [grid.diff(f, ax) for f in layer for ax in range(grid.ndim)]
        mag = np.sqrt(sum(f**2 for f in layer))
        total += float(np.sum(mag**q * w) ** (1.0 / q))
    return total


def localized_norm(u: ScalarField, k: int, q: float, sys: LocalizationSystem) -> float:
    """(sum over charts of ||pi_k u||_{W_q^k(box)}^q)^(1/q), flat box norms."""
    if k > 2:
        raise ValueError("localized norms implemented for k <= 2")
    if not np.isfinite(q) or q < 1:
        raise ValueError("q must be a finite exponent >= 1")
    family = coretract(u, sys)
    parts = []
    for lf in family:
        bc = sys.bound[lf.chart_id]
        if bc.local_grid is None:
            continue
        parts.append(flat_box_norm(lf.data, bc.local_grid, k, q))
    return float(np.sum(np.asarray(parts) ** q) ** (1.0 / q))
