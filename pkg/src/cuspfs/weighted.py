"""Weighted Sobolev/BC norms and the conformal correction calculus.

The two Levi-Civita connections of g and g-hat = g/rho^2 differ by a
(1,2)-tensor S built from d(log rho).  Iterating that relation yields
correction families a_i^k, b_i^k that convert k-fold covariant derivatives
between the two connections; multiplying by a weight rho^lambda commutes with
hat-derivatives up to a second family of coefficients.  Everything here is
assembled from geometry-core contractions, so the exactness of the identities
is testable at machine precision where the algebra is exact and at O(h^2)
where finite differences enter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cusps import CuspGeometry
from .geometry import (
    MetricField,
    ScalarField,
    TensorField,
    bundle_norm,
    complete_contraction,
    conformal_rescale,
    contract,
    covariant_derivative,
    integrate,
    scalar_field,
    tensor_product,
)

__all__ = [
    "WeightedNormSpec",
    "CorrectionTensors",
    "s_tensor",
    "s_apply",
    "correction_families",
    "weighted_sobolev_norm",
    "bc_weighted_norm",
    "weight_map",
    "nabla_list",
    "hat_from_plain",
    "plain_from_hat",
    "norm_equivalence_report",
    "commutator_check",
    "embedding_check",
    "multiplication_check",
    "hat_sobolev_norm",
    "make_corpus",
]

_L = "abcdefghijkl"


@dataclass(frozen=True)
class WeightedNormSpec:
    """Order/weight/integrability triple with its weight field.

    q = inf selects the BC-style norm.  `mu` optionally records the decay
    rate of a corpus function this spec is paired with (used by oracles).
    """

    k: int
    lam: float
    q: float
    rho: ScalarField
    mu: float | None = None

    def __post_init__(self):
        if not 0 <= self.k <= 3:
            raise ValueError("weighted norms implemented for orders k <= 3")
        if not (self.q == np.inf or self.q >= 1):
            raise ValueError("integrability exponent must be in [1, inf]")
        r = self.rho.values
        if np.any(r <= 0) or np.any(r > 1 + 1e-12):
            raise ValueError("weight field must take values in (0, 1]")


def nabla_list(u: TensorField, g: MetricField, k: int) -> list[TensorField]:
    """[u, nabla u, ..., nabla^k u]."""
    out = [u]
    for _ in range(k):
        out.append(covariant_derivative(out[-1], g))
    return out


def weighted_sobolev_norm(u: ScalarField, g: MetricField, spec: WeightedNormSpec) -> float:
    """Sum over i <= k of || rho^(-lam + i - m/q) |nabla^i u| ||_Lq(M, dV_g)."""
    if spec.q == np.inf:
        return bc_weighted_norm(u, g, spec)
    m = u.grid.ndim
    rho = spec.rho.values
    total = 0.0
    for i, du in enumerate(nabla_list(u, g, spec.k)):
        w = rho ** (-spec.lam + i - m / spec.q)
        total += integrate(scalar_field(u.grid, w * bundle_norm(du, g).values), g, spec.q)
    return total


def bc_weighted_norm(u: TensorField, g: MetricField, spec: WeightedNormSpec) -> float:
    """Sum over i <= k of sup rho^(-lam + i) |nabla^i u| (grid max surrogate)."""
    rho = spec.rho.values
    total = 0.0
    for i, du in enumerate(nabla_list(u, g, spec.k)):
        total += float(np.max(rho ** (-spec.lam + i) * bundle_norm(du, g).values))
    return total


def weight_map(u: ScalarField, lam: float, rho: ScalarField) -> ScalarField:
    """The isomorphism P^lam: u -> rho^lam u; exact inverse is P^(-lam)."""
    return scalar_field(u.grid, rho.values**lam * u.values)


# ---------------------------------------------------------------------------
# connection difference tensor and correction families
# ---------------------------------------------------------------------------


def _swap_cov(a: TensorField, t1: int, t2: int) -> TensorField:
    ax1 = a.grid.ndim + a.sigma + t1 - 1
    ax2 = a.grid.ndim + a.sigma + t2 - 1
    return TensorField(a.grid, a.sigma, a.tau, np.swapaxes(a.data, ax1, ax2))


def s_tensor(rho: ScalarField, g: MetricField) -> TensorField:
    """Difference tensor S with (nabla-hat - nabla) omega = S . omega.

    Assembled as 2 sym(d log rho (x) C_1^2(g* (x) g)) - g (x) (g# d log rho);
    componentwise S^k_ij = dlp_i delta^k_j + dlp_j delta^k_i - g_ij g^kl dlp_l,
    which equals minus the Christoffel difference of g-hat = g/rho^2 and g.
    """
    if np.any(rho.values <= 0):
        raise ValueError("weight must be positive")
    logr = scalar_field(rho.grid, np.log(rho.values))
    dlp = covariant_derivative(logr, g)
    delta = contract(tensor_product(g.inverse_tensor(), g.as_tensor()), 2, 1)
    t1 = tensor_product(dlp, delta)  # dlp_i delta^k_j
    sharp = contract(tensor_product(g.inverse_tensor(), dlp), 2, 1)  # (g# dlp)^k
    t2 = tensor_product(g.as_tensor(), sharp)  # g_ij (g# dlp)^k
    return t1 + _swap_cov(t1, 1, 2) - t2


def s_apply(S: TensorField, u: TensorField) -> TensorField:
    """S^k u: one S-contraction per covariant slot, derivative index appended."""
    if u.sigma != 0 or u.tau < 1:
        raise ValueError("S acts on covariant tensors of positive order")
    k = u.tau
    grid = u.grid
    comp = _L[:k]
    new = _L[k]
    p = _L[k + 1]
    out = np.zeros(grid.shape + (grid.ndim,) * (k + 1))
    for t in range(k):
        src = comp[:t] + p + comp[t + 1 :]
        out += np.einsum(f"...{p}{new}{comp[t]},...{src}->...{comp}{new}", S.data, u.data)
    return TensorField(grid, 0, k + 1, out)


def _coeff_apply(c: TensorField, w: TensorField) -> TensorField:
    """c . w for a coefficient c in T^i_k acting on w in T^0_i."""
    return complete_contraction(c, w)


def _coeff_compose(outer: TensorField, inner: TensorField) -> TensorField:
    """Composition of coefficient maps: contract outer's contravariant slots
    against inner's covariant slots; (outer o inner) . w = outer . (inner . w)."""
    gdim = outer.grid.ndim
    io, ko = outer.sigma, outer.tau
    ii, ki = inner.sigma, inner.tau
    if io != ki:
        raise ValueError("coefficient composition: middle valence mismatch")
    oc = _L[: io + ko]
    icv = _L[io + ko : io + ko + ii]
    src_inner = icv + oc[:io]
    out = np.einsum(f"...{oc},...{src_inner}->...{icv}{oc[io:]}", outer.data, inner.data)
    return TensorField(outer.grid, ii, ko, out)


def _coeff_pad(c: TensorField) -> TensorField:
    """Shift a coefficient one derivative level up: (pad c)^(p)q_(j)l = c^(p)_(j) d^q_l."""
    grid = c.grid
    m = grid.ndim
    eye = np.eye(m)
    cc = _L[: c.rank]
    out = np.einsum(f"...{cc},{_L[c.rank]}{_L[c.rank+1]}->...{cc[:c.sigma]}{_L[c.rank]}{cc[c.sigma:]}{_L[c.rank+1]}", c.data, eye)
    return TensorField(grid, c.sigma + 1, c.tau + 1, out)


def _a_coeff(S: TensorField, k: int) -> TensorField:
    """Materialize a^k with a^k . u = S^k u for u in T^0_k."""
    grid = S.grid
    m = grid.ndim
    eye = np.eye(m)
    comp = _L[:k]
    new = _L[k]
    ps = _L[k + 1 : 2 * k + 1]
    out = np.zeros(grid.shape + (m,) * (2 * k + 1))
    for t in range(k):
        ops, subs = [], []
        for r in range(k):
            if r == t:
                ops.append(S.data)
                subs.append(f"...{ps[r]}{new}{comp[r]}")
            else:
                ops.append(eye)
                subs.append(f"{ps[r]}{comp[r]}")
        out += np.einsum(",".join(subs) + f"->...{ps}{comp}{new}", *ops)
    return TensorField(grid, k, k + 1, out)


def _zero_coeff(grid, sigma, tau) -> TensorField:
    return TensorField(grid, sigma, tau, np.zeros(grid.shape + (grid.ndim,) * (sigma + tau)))


@dataclass
class CorrectionTensors:
    """S plus the derivative-conversion families and weight-commutator fields."""

    S: TensorField
    a: dict[tuple[int, int], TensorField]
    b: dict[tuple[int, int], TensorField]
    lam: float | None = None
    ahat: dict[tuple[int, int], TensorField] = field(default_factory=dict)

    def hat_derivative(self, nablas: list[TensorField], k: int) -> TensorField:
        """nabla-hat^k u from plain derivatives [u, nabla u, ...] via the a-family."""
        out = nablas[k]
        for i in range(k):
            c = self.a[(i, k)]
            out = out + _coeff_apply(c, nablas[i])
        return out

    def plain_derivative(self, hats: list[TensorField], k: int) -> TensorField:
        """nabla^k u from hat derivatives via the b-family (forward substitution)."""
        out = hats[k]
        for i in range(k):
            out = out + _coeff_apply(self.b[(i, k)], hats[i])
        return out


def correction_families(rho: ScalarField, g: MetricField, k_max: int = 3, lam: float | None = None) -> CorrectionTensors:
    """Build S, the a_i^k / b_i^k families for k <= k_max, and (optionally)
    the weight-commutator coefficients for delta = rho^lam."""
    if k_max > 3:
        raise ValueError("valence cap: correction families implemented for k_max <= 3")
    grid = rho.grid
    S = s_tensor(rho, g)
    a: dict[tuple[int, int], TensorField] = {(0, 1): _zero_coeff(grid, 0, 1)}
    acoeff = {1: S, 2: None}
    for k in range(1, k_max):
        ak = acoeff.get(k)
        if ak is None:
            ak = _a_coeff(S, k)
            acoeff[k] = ak
        for i in range(k):  # interior levels of the recursion
            term = covariant_derivative(a[(i, k)], g) + _coeff_compose(ak, a[(i, k)])
            if i >= 1:
                term = term + _coeff_pad(a[(i - 1, k)])
            a[(i, k + 1)] = term
        top = ak
        if k >= 1 and (k - 1, k) in a:
            top = top + _coeff_pad(a[(k - 1, k)])
        a[(k, k + 1)] = top

    # forward substitution: express nabla^k through hat derivatives
    b: dict[tuple[int, int], TensorField] = {}
    expr: dict[int, dict[int, TensorField]] = {0: {}}
    for j in range(1, k_max + 1):
        terms: dict[int, TensorField] = {}
        for i in range(j):
            neg = -1.0 * a[(i, j)]
            terms[i] = terms[i] + neg if i in terms else neg
            for r, c in expr[i].items():
                comp = _coeff_compose(neg, c)
                terms[r] = terms[r] + comp if r in terms else comp
        expr[j] = terms
        for i, c in terms.items():
            b[(i, j)] = c
    ct = CorrectionTensors(S, a, b)
    if lam is not None:
        ct.lam = lam
        ct.ahat = _commutator_coeffs(rho, g, lam)
    return ct


def _commutator_coeffs(rho: ScalarField, g: MetricField, lam: float) -> dict[tuple[int, int], TensorField]:
    """Coefficients of nabla-hat^k(delta u) = delta (nabla-hat^k u + sum ...)
    for delta = rho^lam, k <= 2; the (1,2) entry acts symmetrically."""
    ghat = conformal_rescale(g, rho)
    a1 = covariant_derivative(scalar_field(rho.grid, lam * np.log(rho.values)), ghat)
    hess = covariant_derivative(a1, ghat)
    return {
        (0, 1): a1,
        (1, 2): 2.0 * a1,
        (0, 2): hess + tensor_product(a1, a1),
    }


def hat_from_plain(u: ScalarField, g: MetricField, rho: ScalarField, k: int, fams: CorrectionTensors | None = None):
    fams = fams or correction_families(rho, g, k)
    nablas = nabla_list(u, g, k)
    return [fams.hat_derivative(nablas, j) for j in range(k + 1)]


def plain_from_hat(hats: list[TensorField], fams: CorrectionTensors, k: int):
    return [fams.plain_derivative(hats, j) for j in range(k + 1)]


# ---------------------------------------------------------------------------
# corpus and checkers
# ---------------------------------------------------------------------------


def make_corpus(geom: CuspGeometry, seed: int = 0, size: int = 12, mus=(0.5, 1.0, 2.0)):
    """Smooth test functions rho^mu * (trigonometric/bump factor) on the chart.

    Oscillatory factors keep second derivatives comparable to the functions
    themselves, which is what the measured equivalence brackets assume.
    """
    if size < 12:
        raise ValueError("corpus too small: need at least 12 functions")
    rng = np.random.default_rng(seed)
    grid = geom.grid
    coords = grid.coords()
    s = coords[0] - grid.axes[0][0]
    span = grid.axes[0][-1] - grid.axes[0][0]
    out = []
    for n in range(size):
        mu = mus[n % len(mus)]
        omega = 2.0 + 1.5 * rng.random()
        phase = 2.0 * np.pi * rng.random()
        kind = n % 4
        if kind == 0:
            f = np.sin(omega * s + phase) + 1.5
        elif kind == 1:
            f = np.cos(omega * s + phase) * np.sin(0.5 * omega * s) + 1.5
        elif kind == 2:
            x = np.clip((s - 0.1 * span) / (0.6 * span), 0.0, 1.0)
            f = np.sin(np.pi * x) ** 4 * np.cos(omega * s) + 0.5
        else:
            f = 1.0 + 0.5 * np.sin(omega * s + phase)
        if grid.ndim == 2:
            jj = int(rng.integers(1, 4))
            f = f * (1.2 + np.cos(jj * coords[1] + phase))
        u = geom.rho.values**mu * f
        out.append((f"u{n:02d}", scalar_field(grid, u), mu))
    return out


def norm_equivalence_report(corpus, geom: CuspGeometry, k: int, q: float) -> dict:
    """Per-function ratio of the rho-weighted g-norm to the plain g-hat norm."""
    if len(corpus) < 12:
        raise ValueError("corpus too small: need at least 12 functions")
    rows = []
    for name, u, mu in corpus:
        spec = WeightedNormSpec(k=k, lam=0.0, q=q, rho=geom.rho, mu=mu)
        weighted = weighted_sobolev_norm(u, geom.g, spec)
        hat = 0.0
        for du in nabla_list(u, geom.ghat, k):
            hat += integrate(scalar_field(u.grid, bundle_norm(du, geom.ghat).values), geom.ghat, q)
        rows.append({"function_id": name, "value": weighted, "ratio": weighted / hat})
    ratios = np.array([r["ratio"] for r in rows])
    return {
        "rows": rows,
        "min": float(ratios.min()),
        "max": float(ratios.max()),
        "median": float(np.median(ratios)),
    }


def commutator_check(u: ScalarField, geom: CuspGeometry, lam: float, k: int) -> dict:
    """Exact product-rule residual (k=1) and two-sided ratio of the k-sums."""
    if k > 2:
        raise ValueError("commutator ratios implemented for k <= 2")
    ghat, rho = geom.ghat, geom.rho
    delta = rho.values**lam
    du = covariant_derivative(u, ghat)
    dv = covariant_derivative(scalar_field(u.grid, delta * u.values), ghat)
    ddelta = covariant_derivative(scalar_field(u.grid, delta), ghat)
    resid = dv.data - delta[..., None] * du.data - u.values[..., None] * ddelta.data
    residual = float(np.max(np.abs(resid)))

    hats_u = nabla_list(u, ghat, k)
    hats_du = nabla_list(scalar_field(u.grid, delta * u.values), ghat, k)
    lhs = sum(bundle_norm(f, ghat).values for f in hats_du)
    rhs = delta * sum(bundle_norm(f, ghat).values for f in hats_u)
    mask = rhs > 1e-12 * float(rhs.max())
    ratio = lhs[mask] / rhs[mask]
    return {
        "residual": residual,
        "ratio_min": float(ratio.min()),
        "ratio_max": float(ratio.max()),
        "ratio_median": float(np.median(ratio)),
    }


def hat_sobolev_norm(u: ScalarField, geom: CuspGeometry, k: int, q: float) -> float:
    """Plain Sobolev norm of the desingularized manifold (metric g-hat)."""
    if q == np.inf:
        return sum(float(np.max(bundle_norm(d, geom.ghat).values)) for d in nabla_list(u, geom.ghat, k))
    tot = 0.0
    for d in nabla_list(u, geom.ghat, k):
        tot += integrate(scalar_field(u.grid, bundle_norm(d, geom.ghat).values), geom.ghat, q)
    return tot


def embedding_check(corpus, geom: CuspGeometry, variant: str, **params) -> dict:
    """Empirical constants for the Sobolev / Morrey / Gagliardo-Nirenberg
    embeddings on the desingularized chart, and the exact weight monotonicity."""
    m = geom.m
    rows = []
    if variant == "sobolev":
        s1, q1, s0, q0 = params["s1"], params["q1"], params["s0"], params["q0"]
        if s1 - m / q1 < s0 - m / q0 or s1 <= s0:
            raise ValueError("Sobolev index relation violated")
        for name, u, _ in corpus:
            rows.append({"function_id": name, "ratio": hat_sobolev_norm(u, geom, s0, q0) / hat_sobolev_norm(u, geom, s1, q1)})
    elif variant == "morrey":
        k, q, t = params["k"], params["q"], params["t"]
        if not t < k - m / q:
            raise ValueError("Morrey index relation violated")
        for name, u, _ in corpus:
            rows.append({"function_id": name, "ratio": hat_sobolev_norm(u, geom, t, np.inf) / hat_sobolev_norm(u, geom, k, q)})
    elif variant == "gn":
        q = params["q"]
        for name, u, _ in corpus:
            num = hat_sobolev_norm(u, geom, 1, q)
            den = math.sqrt(hat_sobolev_norm(u, geom, 0, q) * hat_sobolev_norm(u, geom, 2, q))
            rows.append({"function_id": name, "ratio": num / den})
    elif variant == "monotonicity":
        k, q, lam0, lam1 = params["k"], params["q"], params["lam0"], params["lam1"]
        if lam1 < lam0:
            raise ValueError("monotonicity check needs lam1 >= lam0")
        for name, u, _ in corpus:
            n0 = weighted_sobolev_norm(u, geom.g, WeightedNormSpec(k, lam0, q, geom.rho))
            n1 = weighted_sobolev_norm(u, geom.g, WeightedNormSpec(k, lam1, q, geom.rho))
            rows.append({"function_id": name, "ratio": n0 / n1, "exact": n0 <= n1 * (1 + 1e-12)})
    else:
        raise ValueError(f"unknown embedding variant {variant!r}")
    ratios = np.array([r["ratio"] for r in rows])
    return {"rows": rows, "max": float(ratios.max()), "min": float(ratios.min())}


def multiplication_check(v: ScalarField, u: ScalarField, geom: CuspGeometry, k: int, q: float, lam0: float, lam1: float) -> dict:
    """||v u||_{k, lam0+lam1} against ||v||_BC^{k,lam0} ||u||_{k, lam1}."""
    if k > 2:
        raise ValueError("multiplication check implemented for k <= 2")
    vu = scalar_field(u.grid, v.values * u.values)
    num = weighted_sobolev_norm(vu, geom.g, WeightedNormSpec(k, lam0 + lam1, q, geom.rho))
    nv = bc_weighted_norm(v, geom.g, WeightedNormSpec(k, lam0, np.inf, geom.rho))
    nu = weighted_sobolev_norm(u, geom.g, WeightedNormSpec(k, lam1, q, geom.rho))
    return {"ratio": num / (nv * nu), "bc_norm": nv, "weighted_norm": nu, "product_norm": num}
