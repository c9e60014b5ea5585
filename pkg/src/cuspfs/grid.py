"""Chart grids: the discrete carrier for all fields.

A chart grid is a tensor product of one or two strictly increasing coordinate
axes.  Axes may be periodic (angular coordinates), in which case the spacing
must be uniform and the stated period closes the circle.  The grid owns its
finite-difference stencils (2nd-order centered in the interior, 2nd-order
one-sided at non-periodic edges, exact local spacings throughout) and its
trapezoidal quadrature weights.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["ChartGrid", "fd_weights"]


def fd_weights(x: np.ndarray, x0: float, der: int) -> np.ndarray:
    """Finite-difference weights on stencil nodes `x` for d^der/dx^der at x0.

    Solves the small Vandermonde moment system; exact for polynomials of
    degree < len(x).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if der >= n:
        raise ValueError("stencil too short for derivative order")
    A = np.vander(x - x0, n, increasing=True).T / np.array(
        [math.factorial(p) for p in range(n)]
    )[:, None]
    rhs = np.zeros(n)
    rhs[der] = 1.0
    w = np.linalg.solve(A, rhs)
    if der >= 1:
        # make the left-to-right accumulation annihilate constants exactly
        s = 0.0
        for j in range(n - 1):
            s += w[j]
        w[n - 1] = -s
    return w


class _AxisStencil:
    """Precomputed gather indices and weights for one axis and one derivative."""

    def __init__(self, idx: np.ndarray, wts: np.ndarray):
        self.idx = idx  # (n, npts) int
        self.wts = wts  # (n, npts) float

    @classmethod
    def build(cls, x: np.ndarray, der: int, periodic: bool, period: float | None):
        n = x.size
        if periodic:
            h = (period if period is not None else (x[-1] - x[0])) / n
            # uniform centered stencils with wraparound
            i = np.arange(n)
            idx = np.stack([(i - 1) % n, i, (i + 1) % n], axis=1)
            if der == 1:
                w = np.array([-0.5 / h, 0.0, 0.5 / h])
            else:
                w = np.array([1.0, -2.0, 1.0]) / h**2
            wts = np.broadcast_to(w, (n, 3)).copy()
            return cls(idx, wts)
        npts = 3 if der == 1 else 4
        idx = np.empty((n, npts), dtype=int)
        wts = np.empty((n, npts))
        for i in range(n):
            if der == 1:
                lo = min(max(i - 1, 0), n - 3)
            else:
                # centered 3-point in the interior, 4-point one-sided at edges
                if 1 <= i <= n - 2:
                    lo = i - 1
                    idx[i, :3] = np.arange(lo, lo + 3)
                    idx[i, 3] = idx[i, 2]
                    wts[i, :3] = fd_weights(x[lo : lo + 3], x[i], 2)
                    wts[i, 3] = 0.0
                    continue
                lo = 0 if i == 0 else n - 4
            idx[i] = np.arange(lo, lo + npts)
            wts[i] = fd_weights(x[lo : lo + npts], x[i], der)
        return cls(idx, wts)

    def apply(self, arr: np.ndarray, axis: int) -> np.ndarray:
        a = np.moveaxis(arr, axis, 0)
        out = np.zeros_like(a, dtype=float)
        for j in range(self.idx.shape[1]):
            out += self.wts[:, j].reshape((-1,) + (1,) * (a.ndim - 1)) * a[self.idx[:, j]]
        return np.moveaxis(out, 0, axis)


class ChartGrid:
    """Tensor-product coordinate grid in one or two dimensions.

    Parameters
    ----------
    axes : sequence of 1-D strictly increasing coordinate arrays (>= 4 nodes).
    periodic : per-axis flags; a periodic axis must be uniformly spaced and
        covers [x0, x0 + period) without repeating the seam node.
    periods : per-axis period lengths (only used for periodic axes).
    """

    def __init__(self, axes, periodic=None, periods=None):
        axes = tuple(np.asarray(ax, dtype=float) for ax in axes)
        if not 1 <= len(axes) <= 2:
            raise ValueError("only 1-D and 2-D chart grids are supported")
        for ax in axes:
            if ax.ndim != 1 or ax.size < 4:
                raise ValueError("each axis needs at least 4 nodes")
            if np.any(np.diff(ax) <= 0):
                raise ValueError("axis coordinates must be strictly increasing")
        m = len(axes)
        periodic = tuple(bool(p) for p in (periodic or (False,) * m))
        periods = tuple(periods or (None,) * m)
        for ax, per, p in zip(axes, periodic, periods):
            if per:
                if p is None:
                    raise ValueError("periodic axis needs an explicit period")
                h = np.diff(ax)
                if not np.allclose(h, h[0], rtol=1e-12, atol=1e-12):
                    raise ValueError("periodic axis must be uniformly spaced")
        self.axes = axes
        self.periodic = periodic
        self.periods = periods
        self._stencils: dict[tuple[int, int], _AxisStencil] = {}

    # -- basic queries -----------------------------------------------------
    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.size for ax in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def coords(self) -> tuple[np.ndarray, ...]:
        """Node coordinate arrays of shape `self.shape` (ij indexing)."""
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    def axis_weights(self, axis: int) -> np.ndarray:
        """Trapezoidal quadrature weights along one axis."""
        x = self.axes[axis]
        if self.periodic[axis]:
            h = self.periods[axis] / x.size
            return np.full(x.size, h)
        w = np.zeros(x.size)
        h = np.diff(x)
        w[:-1] += h / 2.0
        w[1:] += h / 2.0
        return w

    def cell_weights(self) -> np.ndarray:
        """Tensor-product quadrature weights, one per node."""
        w = self.axis_weights(0)
        for ax in range(1, self.ndim):
            w = np.multiply.outer(w, self.axis_weights(ax))
        return w

    # -- differentiation ---------------------------------------------------
    def _stencil(self, axis: int, der: int) -> _AxisStencil:
        key = (axis, der)
        if key not in self._stencils:
            self._stencils[key] = _AxisStencil.build(
                self.axes[axis], der, self.periodic[axis], self.periods[axis]
            )
        return self._stencils[key]

    def diff(self, arr: np.ndarray, axis: int) -> np.ndarray:
        """First derivative along a grid axis (arr leading dims = grid shape)."""
        return self._stencil(axis, 1).apply(arr, axis)

    def diff2(self, arr: np.ndarray, axis: int) -> np.ndarray:
        """Compact second derivative along a grid axis."""
        return self._stencil(axis, 2).apply(arr, axis)

    def same_as(self, other: "ChartGrid") -> bool:
        return (
            self.ndim == other.ndim
            and self.shape == other.shape
            and all(np.array_equal(a, b) for a, b in zip(self.axes, other.axes))
            and self.periodic == other.periodic
        )
