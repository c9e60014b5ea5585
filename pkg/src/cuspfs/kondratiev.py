"""Kondratiev norms on planar sectors and their weighted-Sobolev equivalents.

On a sector or punctured disk with the flat metric in polar coordinates, the
Kondratiev norm weights Cartesian partial derivatives by powers of a distance
function delta for the tip; delta equals r near the tip and 1 away from it,
blended by the same smoothstep used for cusp gluing.  Cartesian derivatives
are obtained from covariant polar derivatives by the exact chain rule at the
nodes; no resampling is involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cusps import smoothstep
from .geometry import (
    MetricField,
    ScalarField,
    bundle_norm,
    covariant_derivative,
    integrate,
    scalar_field,
)
from .grid import ChartGrid

__all__ = [
    "ConicalDomain",
    "cartesian_derivatives",
    "kondratiev_norm",
    "distance_norm",
    "kondratiev_equivalence_report",
    "make_sector_corpus",
]


@dataclass
class ConicalDomain:
    """Planar sector 0 < r <= 1, theta in [0, theta1] (periodic: punctured disk)."""

    grid: ChartGrid
    g: MetricField
    delta: ScalarField
    theta1: float
    periodic: bool
    eps0: float
    eps1: float

    @classmethod
    def build(
        cls,
        theta1: float = 2.0 * np.pi,
        periodic: bool = True,
        nr: int = 192,
        ntheta: int = 48,
        r_min: float = 1e-3,
        eps0: float = 0.25,
        eps1: float = 0.5,
    ) -> "ConicalDomain":
        if not 0 < theta1 <= 2.0 * np.pi:
            raise ValueError("opening angle must lie in (0, 2 pi]")
        if periodic and abs(theta1 - 2.0 * np.pi) > 1e-12:
            raise ValueError("periodic domains are punctured disks (theta1 = 2 pi)")
        if not 0 < eps0 < eps1 <= 1:
            raise ValueError("blend radii must satisfy 0 < eps0 < eps1 <= 1")
        r = np.geomspace(r_min, 1.0, nr)
        if periodic:
            theta = np.linspace(0.0, theta1, ntheta, endpoint=False)
            grid = ChartGrid([r, theta], periodic=[False, True], periods=[None, theta1])
        else:
            theta = np.linspace(0.0, theta1, ntheta)
            grid = ChartGrid([r, theta])
        rr = grid.coords()[0]
        gl = np.zeros(grid.shape + (2, 2))
        gl[..., 0, 0] = 1.0
        gl[..., 1, 1] = rr**2
        g = MetricField(grid, gl)
        om = smoothstep((rr - eps0) / (eps1 - eps0))
        delta = scalar_field(grid, (1.0 - om) * rr + om)
        return cls(grid, g, delta, theta1, periodic, eps0, eps1)


def cartesian_derivatives(u: ScalarField, domain: ConicalDomain, k: int) -> dict:
    """Cartesian partials up to order k from covariant polar derivatives.

    The gradient and Hessian transform tensorially, so one exact chain-rule
    contraction per node recovers d^alpha u for |alpha| <= 2.
    """
    if k > 2:
        raise ValueError("Cartesian derivatives implemented for k <= 2")
    grid = domain.grid
    rr, th = grid.coords()
    c, s = np.cos(th), np.sin(th)
    # dxi^i/dx^a rows: xi = (r, theta), x = (x, y)
    B = np.empty(grid.shape + (2, 2))
    B[..., 0, 0] = c
    B[..., 0, 1] = s
    B[..., 1, 0] = -s / rr
    B[..., 1, 1] = c / rr
    out = {(0, 0): u.values}
    if k >= 1:
        du = covariant_derivative(u, domain.g)
        grad = np.einsum("...ia,...i->...a", B, du.data)
        out[(1, 0)] = grad[..., 0]
        out[(0, 1)] = grad[..., 1]
    if k >= 2:
        hess = covariant_derivative(covariant_derivative(u, domain.g), domain.g)
        H = np.einsum("...ia,...jb,...ij->...ab", B, B, hess.data)
        out[(2, 0)] = H[..., 0, 0]
        out[(1, 1)] = H[..., 0, 1]
        out[(0, 2)] = H[..., 1, 1]
    return out


def kondratiev_norm(u: ScalarField, k: int, a: float, q: float, domain: ConicalDomain) -> float:
    """Sum over |alpha| <= k of || delta^(|alpha| - a) d^alpha u ||_Lq."""
    if q < 1:
        raise ValueError("integrability exponent must be >= 1")
    parts = cartesian_derivatives(u, domain, k)
    delta = domain.delta.values
    total = 0.0
    for alpha, vals in parts.items():
        j = sum(alpha)
        total += integrate(scalar_field(domain.grid, delta ** (j - a) * np.abs(vals)), domain.g, q)
    return total


def distance_norm(u: ScalarField, k: int, lam: float, q: float, domain: ConicalDomain) -> float:
    """Weighted Sobolev norm with the distance function as the weight field."""
    delta = domain.delta.values
    total = 0.0
    field = u
    for j in range(k + 1):
        if j:
            field = covariant_derivative(field, domain.g)
        w = delta ** (-lam + j - 2.0 / q)
        total += integrate(scalar_field(domain.grid, w * bundle_norm(field, domain.g).values), domain.g, q)
    return total


def make_sector_corpus(domain: ConicalDomain, seed: int = 0, size: int = 12, mus=(0.5, 1.0, 2.0)):
    """Smooth radial-power times oscillatory test functions on the sector."""
    if size < 12:
        raise ValueError("corpus too small: need at least 12 functions")
    rng = np.random.default_rng(seed)
    rr, th = domain.grid.coords()
    out = []
    for n in range(size):
        mu = mus[n % len(mus)]
        omega = 1.0 + 2.0 * rng.random()
        phase = 2.0 * np.pi * rng.random()
        jj = int(rng.integers(1, 4))
        ang = jj * th * (2.0 * np.pi / domain.theta1) if not domain.periodic else jj * th
        f = (1.5 + np.sin(omega * np.log(rr) + phase)) * (1.2 + np.cos(ang + phase))
        out.append((f"v{n:02d}", scalar_field(domain.grid, rr**mu * f), mu))
    return out


def kondratiev_equivalence_report(corpus, k: int, a: float, q: float, domain: ConicalDomain) -> dict:
    """Ratios K / W with the index shift lam = a - m/q of the equivalence."""
    lam = a - 2.0 / q
    rows = []
    for name, u, mu in corpus:
        kn = kondratiev_norm(u, k, a, q, domain)
        dn = distance_norm(u, k, lam, q, domain)
        rows.append({"function_id": name, "value": kn, "ratio": kn / dn})
    ratios = np.array([r["ratio"] for r in rows])
    return {
        "rows": rows,
        "lam": lam,
        "min": float(ratios.min()),
        "max": float(ratios.max()),
        "median": float(np.median(ratios)),
    }
