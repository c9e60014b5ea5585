"""Coordinate tensor calculus on chart grids.

Fields are plain component arrays over a ChartGrid.  A (sigma, tau)-tensor
stores its contravariant axes first, covariant axes last; the covariant
derivative appends the differentiation index as the final covariant axis.
All operations are pure functions of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .grid import ChartGrid

__all__ = [
    "TensorField",
    "ScalarField",
    "MetricField",
    "GridMap",
    "MetricDegeneracyError",
    "scalar_field",
    "christoffel",
    "covariant_derivative",
    "contract",
    "complete_contraction",
    "tensor_product",
    "bundle_norm",
    "integrate",
    "volume_integral",
    "conformal_rescale",
    "pullback",
    "identity_map",
    "generalized_eig_bounds",
    "field_to_csv",
]

_LETTERS = "abcdefghijkl"


class MetricDegeneracyError(ValueError):
    """Metric failed positive-definiteness; carries the offending node index."""

    def __init__(self, node, detail=""):
        self.node = tuple(int(i) for i in np.atleast_1d(node))
        super().__init__(f"metric not positive definite at node {self.node} {detail}")


@dataclass(frozen=True)
class TensorField:
    """Componentwise (sigma, tau)-tensor field on a chart grid."""

    grid: ChartGrid
    sigma: int
    tau: int
    data: np.ndarray

    def __post_init__(self):
        m = self.grid.ndim
        want = self.grid.shape + (m,) * (self.sigma + self.tau)
        if self.data.shape != want:
            raise ValueError(f"component array shape {self.data.shape} != {want}")

    @property
    def valence(self) -> tuple[int, int]:
        return (self.sigma, self.tau)

    @property
    def rank(self) -> int:
        return self.sigma + self.tau

    @property
    def values(self) -> np.ndarray:
        if self.rank != 0:
            raise ValueError("values is only defined for scalar fields")
        return self.data

    def __add__(self, other: "TensorField") -> "TensorField":
        if self.valence != other.valence:
            raise ValueError("valence mismatch")
        return TensorField(self.grid, self.sigma, self.tau, self.data + other.data)

    def __sub__(self, other: "TensorField") -> "TensorField":
        if self.valence != other.valence:
            raise ValueError("valence mismatch")
        return TensorField(self.grid, self.sigma, self.tau, self.data - other.data)

    def __mul__(self, c) -> "TensorField":
        c = c.data if isinstance(c, TensorField) and c.rank == 0 else c
        if isinstance(c, np.ndarray) and c.ndim:
            c = c.reshape(self.grid.shape + (1,) * self.rank)
        return TensorField(self.grid, self.sigma, self.tau, self.data * c)

    __rmul__ = __mul__


ScalarField = TensorField  # a scalar field is the (0, 0) case


def scalar_field(grid: ChartGrid, values) -> ScalarField:
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        values = np.broadcast_to(values, grid.shape).copy()
    if not np.all(np.isfinite(values)):
        raise ValueError("scalar field has non-finite values")
    return TensorField(grid, 0, 0, values)


def _comp_subscript(rank: int, start: int = 0) -> str:
    return _LETTERS[start : start + rank]


class MetricField:
    """Riemannian metric on a chart grid with cached inverse and volume factor."""

    def __init__(self, grid: ChartGrid, gl: np.ndarray, gu=None, sqrt_det=None, validate=True):
        m = grid.ndim
        gl = np.asarray(gl, dtype=float)
        if gl.shape != grid.shape + (m, m):
            raise ValueError("metric component shape mismatch")
        self.grid = grid
        self.gl = gl
        if validate:
            self._check_spd()
        if gu is None or sqrt_det is None:
            if m == 1:
                det = gl[..., 0, 0]
                gu = (1.0 / det)[..., None, None]
            else:
                det = gl[..., 0, 0] * gl[..., 1, 1] - gl[..., 0, 1] * gl[..., 1, 0]
                gu = np.empty_like(gl)
                gu[..., 0, 0] = gl[..., 1, 1] / det
                gu[..., 1, 1] = gl[..., 0, 0] / det
                gu[..., 0, 1] = -gl[..., 0, 1] / det
                gu[..., 1, 0] = -gl[..., 1, 0] / det
            sqrt_det = np.sqrt(det)
        self.gu = gu
        self.sqrt_det = sqrt_det
        self._christoffel: TensorField | None = None

    def _check_spd(self):
        m = self.grid.ndim
        gl = self.gl
        if m == 1:
            bad = gl[..., 0, 0] <= 0
        else:
            det = gl[..., 0, 0] * gl[..., 1, 1] - gl[..., 0, 1] * gl[..., 1, 0]
            bad = (gl[..., 0, 0] <= 0) | (det <= 0)
        if np.any(bad):
            node = np.argwhere(bad)[0]
            raise MetricDegeneracyError(node)

    @classmethod
    def from_function(cls, grid: ChartGrid, fn: Callable) -> "MetricField":
        """Metric from a callable (coord arrays) -> (..., m, m) components."""
        return cls(grid, np.asarray(fn(*grid.coords()), dtype=float))

    def as_tensor(self) -> TensorField:
        return TensorField(self.grid, 0, 2, self.gl)

    def inverse_tensor(self) -> TensorField:
        return TensorField(self.grid, 2, 0, self.gu)

    @property
    def christoffel(self) -> TensorField:
        if self._christoffel is None:
            self._christoffel = christoffel(self)
        return self._christoffel


def christoffel(g: MetricField) -> TensorField:
    """Christoffel symbols Gamma^k_ij of the Levi-Civita connection of g."""
    grid = g.grid
    m = grid.ndim
    dg = np.stack([grid.diff(g.gl, ax) for ax in range(m)], axis=-1)  # d_c g_ab
    x = (
        np.einsum("...jli->...lij", dg)
        + np.einsum("...ilj->...lij", dg)
        - np.einsum("...ijl->...lij", dg)
    )
    gamma = 0.5 * np.einsum("...kl,...lij->...kij", g.gu, x)
    return TensorField(grid, 1, 2, gamma)


def covariant_derivative(u: TensorField, g: MetricField) -> TensorField:
    """Levi-Civita covariant derivative; the new covariant index comes last."""
    grid = u.grid
    m = grid.ndim
    if u.sigma + u.tau + 1 > 6:
        raise ValueError("unsupported valence: covariant derivative exceeds rank 6")
    gam = g.christoffel.data
    out = np.stack([grid.diff(u.data, ax) for ax in range(m)], axis=-1)
    comp = _comp_subscript(u.rank)
    new = _LETTERS[u.rank]  # derivative index letter
    p = _LETTERS[u.rank + 1]
    for s in range(u.sigma):
        src = comp[:s] + p + comp[s + 1 :]
        out += np.einsum(f"...{comp[s]}{new}{p},...{src}->...{comp}{new}", gam, u.data)
    for t in range(u.tau):
        pos = u.sigma + t
        src = comp[:pos] + p + comp[pos + 1 :]
        out -= np.einsum(f"...{p}{new}{comp[pos]},...{src}->...{comp}{new}", gam, u.data)
    return TensorField(grid, u.sigma, u.tau + 1, out)


def contract(a: TensorField, s: int, t: int) -> TensorField:
    """Contraction C_t^s over contravariant position s and covariant position t (1-based)."""
    if not (1 <= s <= a.sigma and 1 <= t <= a.tau):
        raise ValueError(f"contraction positions ({s},{t}) out of range for valence {a.valence}")
    comp = list(_comp_subscript(a.rank))
    comp[s - 1] = comp[a.sigma + t - 1]
    src = "".join(comp)
    dst = "".join(c for i, c in enumerate(_comp_subscript(a.rank)) if i not in (s - 1, a.sigma + t - 1))
    data = np.einsum(f"...{src}->...{dst}", a.data)
    return TensorField(a.grid, a.sigma - 1, a.tau - 1, data)


def complete_contraction(a: TensorField, b: TensorField) -> TensorField:
    """Contraction product a . b over the trailing b.tau contravariant slots of a."""
    if b.sigma != 0:
        raise ValueError("second factor must be purely covariant")
    rho = b.tau
    if rho > a.sigma:
        raise ValueError(f"cannot contract {rho} slots against valence {a.valence}")
    if rho == 0:
        return TensorField(a.grid, a.sigma, a.tau, a.data * b.data.reshape(b.grid.shape + (1,) * a.rank))
    ac = _comp_subscript(a.rank)
    keep = ac[: a.sigma - rho] + ac[a.sigma :]
    bound = ac[a.sigma - rho : a.sigma]
    data = np.einsum(f"...{ac},...{bound}->...{keep}", a.data, b.data)
    return TensorField(a.grid, a.sigma - rho, a.tau, data)


def tensor_product(a: TensorField, b: TensorField) -> TensorField:
    """Tensor product with contravariant slots of both factors leading."""
    ac = _comp_subscript(a.rank)
    bc = _comp_subscript(b.rank, a.rank)
    out = ac[: a.sigma] + bc[: b.sigma] + ac[a.sigma :] + bc[b.sigma :]
    data = np.einsum(f"...{ac},...{bc}->...{out}", a.data, b.data)
    return TensorField(a.grid, a.sigma + b.sigma, a.tau + b.tau, data)


def bundle_norm(a: TensorField, g: MetricField) -> ScalarField:
    """Pointwise vector bundle norm |a| induced by g on (sigma, tau)-tensors."""
    if a.rank == 0:
        return scalar_field(a.grid, np.abs(a.data))
    if a.rank > 6:
        raise ValueError("unsupported valence for bundle norm")
    n = a.rank
    ic = _LETTERS[:n]
    jc = _LETTERS[n : 2 * n]
    factors, subs = [], []
    for s in range(a.sigma):
        factors.append(g.gl)
        subs.append(ic[s] + jc[s])
    for t in range(a.sigma, n):
        factors.append(g.gu)
        subs.append(ic[t] + jc[t])
    expr = ",".join(f"...{s}" for s in subs) + f",...{ic},...{jc}->..."
    sq = np.einsum(expr, *factors, a.data, a.data)
    return scalar_field(a.grid, np.sqrt(np.clip(sq, 0.0, None)))


def volume_integral(values: np.ndarray, g: MetricField) -> float:
    """Trapezoidal integral of a plain scalar sample array against dV_g."""
    return float(np.sum(values * g.sqrt_det * g.grid.cell_weights()))


def integrate(u: ScalarField, g: MetricField, q: float = 1.0) -> float:
    """L_q-style integral (sum |u|^q dV_g)^(1/q); exact for constants at q=1."""
    if q < 1:
        raise ValueError("integrability exponent must be >= 1")
    if not np.all(np.isfinite(u.values)):
        raise ValueError("non-finite integrand")
    total = volume_integral(np.abs(u.values) ** q, g)
    return float(total ** (1.0 / q))


def conformal_rescale(g: MetricField, rho: ScalarField) -> MetricField:
    """Conformally rescaled metric g/rho^2 with exactly transformed caches."""
    r = rho.values if isinstance(rho, TensorField) else np.asarray(rho, dtype=float)
    if np.any(r <= 0):
        raise ValueError("conformal factor must be positive")
    m = g.grid.ndim
    gl = g.gl * (r**-2)[..., None, None]
    gu = g.gu * (r**2)[..., None, None]
    sq = g.sqrt_det * r**-m
    return MetricField(g.grid, gl, gu=gu, sqrt_det=sq, validate=False)


# ---------------------------------------------------------------------------
# maps between charts, pull-back of fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridMap:
    """Smooth map F: source chart -> target chart with analytic Jacobian.

    `func` maps source coordinate arrays to target coordinate arrays;
    `jac` returns dF^b/dx^j with shape grid.shape + (m, m), row index b.
    """

    source: ChartGrid
    target: ChartGrid
    func: Callable
    jac: Callable


def identity_map(grid: ChartGrid) -> GridMap:
    m = grid.ndim
    eye = np.broadcast_to(np.eye(m), grid.shape + (m, m))
    return GridMap(grid, grid, lambda *xs: xs, lambda *xs: eye.copy())


def _interpolator(grid: ChartGrid, comp: np.ndarray):
    axes, data = [], comp
    for ax in range(grid.ndim):
        x = grid.axes[ax]
        if grid.periodic[ax]:
            period = grid.periods[ax]
            pad = 3
            x = np.concatenate([x[-pad:] - period, x, x[:pad] + period])
            idx = np.r_[np.arange(comp.shape[ax] - pad, comp.shape[ax]), np.arange(comp.shape[ax]), np.arange(pad)]
            data = np.take(data, idx, axis=ax)
        axes.append(x)
    if all(len(a) >= 4 for a in axes):
        # the legacy tensor spline reproduces samples at the nodes exactly
        try:
            return RegularGridInterpolator(tuple(axes), data, method="cubic_legacy", bounds_error=False, fill_value=None)
        except ValueError:
            return RegularGridInterpolator(tuple(axes), data, method="cubic", bounds_error=False, fill_value=None)
    return RegularGridInterpolator(tuple(axes), data, method="linear", bounds_error=False, fill_value=None)


def _wrap_coords(grid: ChartGrid, pts: list[np.ndarray]) -> list[np.ndarray]:
    out = []
    for ax, p in enumerate(pts):
        x = grid.axes[ax]
        if grid.periodic[ax]:
            period = grid.periods[ax]
            p = x[0] + np.mod(p - x[0], period)
        else:
            p = np.clip(p, x[0], x[-1])
        out.append(p)
    return out


def pullback(F: GridMap, a: TensorField) -> TensorField:
    """Pull back a tensor field on F.target to F.source (bicubic sampling)."""
    if not a.grid.same_as(F.target):
        raise ValueError("field does not live on the target chart of the map")
    src = F.source
    m = src.ndim
    pts = list(F.func(*src.coords()))
    J = np.asarray(F.jac(*src.coords()), dtype=float)
    det = J[..., 0, 0] if m == 1 else J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    if np.any(np.abs(det) < 1e-14):
        node = np.argwhere(np.abs(det) < 1e-14)[0]
        raise ValueError(f"singular Jacobian at node {tuple(int(i) for i in node)}")
    if m == 1:
        Jinv = (1.0 / J[..., 0, 0])[..., None, None]
    else:
        Jinv = np.empty_like(J)
        Jinv[..., 0, 0] = J[..., 1, 1] / det
        Jinv[..., 1, 1] = J[..., 0, 0] / det
        Jinv[..., 0, 1] = -J[..., 0, 1] / det
        Jinv[..., 1, 0] = -J[..., 1, 0] / det

    # sample target components at the mapped points
    wpts = _wrap_coords(F.target, pts)
    query = np.stack([p.ravel() for p in wpts], axis=-1)
    comp_shape = (m,) * a.rank
    sampled = np.empty(src.shape + comp_shape)
    for idx in np.ndindex(comp_shape):
        interp = _interpolator(F.target, a.data[(Ellipsis,) + idx])
        sampled[(Ellipsis,) + idx] = interp(query).reshape(src.shape)

    # transformation law: J^{-1} on contravariant slots, J on covariant ones
    out = sampled
    comp = _comp_subscript(a.rank)
    new = _LETTERS[a.rank]
    for s in range(a.sigma):
        src_sub = comp[:s] + new + comp[s + 1 :]
        out = np.einsum(f"...{comp[s]}{new},...{src_sub}->...{comp}", Jinv, out)
    for t in range(a.sigma, a.rank):
        src_sub = comp[:t] + new + comp[t + 1 :]
        out = np.einsum(f"...{new}{comp[t]},...{src_sub}->...{comp}", J, out)
    return TensorField(src, a.sigma, a.tau, out)


def generalized_eig_bounds(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nodewise extreme generalized eigenvalues of symmetric pencil (A, B).

    Closed forms for the 1x1 and 2x2 cases; B must be positive definite.
    """
    m = A.shape[-1]
    if m == 1:
        lam = A[..., 0, 0] / B[..., 0, 0]
        return lam, lam
    a = B[..., 0, 0] * B[..., 1, 1] - B[..., 0, 1] * B[..., 1, 0]
    b = -(
        A[..., 0, 0] * B[..., 1, 1]
        + A[..., 1, 1] * B[..., 0, 0]
        - A[..., 0, 1] * B[..., 1, 0]
        - A[..., 1, 0] * B[..., 0, 1]
    )
    c = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    disc = np.sqrt(np.clip(b * b - 4 * a * c, 0.0, None))
    lo = (-b - disc) / (2 * a)
    hi = (-b + disc) / (2 * a)
    return lo, hi


def field_to_csv(field: TensorField, path) -> None:
    """Debug dump: one row per node, coordinates then components."""
    grid = field.grid
    coords = [c.ravel() for c in grid.coords()]
    names = [f"x{i+1}" for i in range(grid.ndim)]
    cols = list(coords)
    up = "".join(_LETTERS[: field.sigma])
    down = "".join(_LETTERS[field.sigma : field.rank])
    for idx in np.ndindex(*((grid.ndim,) * field.rank)):
        upi = "".join(str(i + 1) for i in idx[: field.sigma])
        dni = "".join(str(i + 1) for i in idx[field.sigma :])
        label = "u" + (f"^{upi}" if up else "") + (f"_{dni}" if down else "")
        names.append(label)
        cols.append(field.data[(Ellipsis,) + idx].ravel())
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*cols):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
