"""Cusp characteristics: profile functions R on I = (0, 1].

A characteristic satisfies 0 < R <= 1, has divergent integral of 1/R at 0
(certified numerically on a sampled sequence of lower limits), and carries
bounded scaled derivatives R^(j-1) d^j R.  Shipped kinds: power profiles
t^alpha (alpha >= 1), exponential profiles exp(alpha (1 - t^-beta)), and
user-supplied sampled profiles interpolated by a quintic spline.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import make_interp_spline

__all__ = [
    "CuspCharacteristic",
    "make_characteristic",
    "validate_characteristic",
    "ArclengthMap",
    "arclength_map",
    "DIVERGENCE_PROBE_CUTOFFS",
    "DIVERGENCE_THRESHOLD",
]

# lower integration limits probed when certifying int dt/R = infinity,
# and the value the deepest probe must exceed
DIVERGENCE_PROBE_CUTOFFS = tuple(10.0 ** (-k) for k in range(2, 9))
DIVERGENCE_THRESHOLD = 10.0


class CuspCharacteristic:
    """Profile R with derivative evaluators up to fourth order."""

    def __init__(self, kind: str, deriv_fn, params: dict, t_floor: float = 1e-12):
        self.kind = kind
        self.params = dict(params)
        self._deriv = deriv_fn
        self.t_floor = t_floor  # below this, evaluation under/overflows
        self.divergence_probe: np.ndarray | None = None

    def __call__(self, t):
        return self._deriv(np.asarray(t, dtype=float), 0)

    def deriv(self, t, order: int = 1):
        if not 0 <= order <= 4:
            raise ValueError("derivatives available up to order 4")
        return self._deriv(np.asarray(t, dtype=float), order)

    def certify(self):
        """Run the range and divergence checks; raise ValueError on failure."""
        probe = np.geomspace(max(self.t_floor, 1e-10), 1.0, 2048)
        vals = self(probe)
        if np.any(~np.isfinite(vals)) or np.any(vals <= 0) or np.any(vals > 1 + 1e-12):
            raise ValueError(f"{self.kind} profile leaves (0, 1] on the test grid")
        # probes below the evaluation floor are clamped there; by that point a
        # genuine characteristic has blown past the threshold anyway
        cutoffs = np.asarray([max(eps, self.t_floor) for eps in DIVERGENCE_PROBE_CUTOFFS])
        partials = np.asarray([_integral_inv(self, eps, 1.0) for eps in cutoffs])
        self.divergence_probe = partials
        _, first = np.unique(cutoffs[::-1], return_index=True)
        distinct = partials[len(cutoffs) - 1 - first][::-1]  # one value per effective cutoff
        if np.any(np.diff(distinct) <= 0):
            raise ValueError("partial integrals of 1/R are not strictly increasing")
        if partials[-1] <= DIVERGENCE_THRESHOLD:
            raise ValueError(
                f"integral of 1/R stays below {DIVERGENCE_THRESHOLD} "
                f"(got {partials[-1]:.4g}); not a cusp characteristic"
            )
        return self


def _power_profile(alpha: float) -> CuspCharacteristic:
    def deriv(t, order):
        if order == 0:
            return t**alpha
        coeff = 1.0
        for j in range(order):
            coeff *= alpha - j
        return coeff * t ** (alpha - order)

    return CuspCharacteristic("power", deriv, {"alpha": alpha})


def _exponential_profile(alpha: float, beta: float) -> CuspCharacteristic:
    # R = exp(phi), phi = alpha (1 - t^-beta); derivatives by Bell polynomials
    def phi_derivs(t):
        p1 = alpha * beta * t ** (-beta - 1)
        p2 = -alpha * beta * (beta + 1) * t ** (-beta - 2)
        p3 = alpha * beta * (beta + 1) * (beta + 2) * t ** (-beta - 3)
        p4 = -alpha * beta * (beta + 1) * (beta + 2) * (beta + 3) * t ** (-beta - 4)
        return p1, p2, p3, p4

    def deriv(t, order):
        R = np.exp(alpha * (1.0 - t ** (-beta)))
        if order == 0:
            return R
        p1, p2, p3, p4 = phi_derivs(t)
        if order == 1:
            return R * p1
        if order == 2:
            return R * (p1**2 + p2)
        if order == 3:
            return R * (p1**3 + 3 * p1 * p2 + p3)
        return R * (p1**4 + 6 * p1**2 * p2 + 3 * p2**2 + 4 * p1 * p3 + p4)

    # exp(phi) underflows for alpha (t^-beta - 1) > ~700
    floor = (700.0 / alpha + 1.0) ** (-1.0 / beta)
    return CuspCharacteristic(
        "exponential", deriv, {"alpha": alpha, "beta": beta}, t_floor=max(floor, 1e-12)
    )


def _sampled_profile(t: np.ndarray, r: np.ndarray) -> CuspCharacteristic:
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    if t.ndim != 1 or t.size < 8 or np.any(np.diff(t) <= 0):
        raise ValueError("sampled profile needs >= 8 strictly increasing abscissae")
    k = 5 if t.size >= 6 else 3
    spline = make_interp_spline(t, r, k=k)
    derivs = [spline.derivative(j) if j else spline for j in range(5)]

    def deriv(tt, order):
        return derivs[order](np.clip(tt, t[0], t[-1]))

    return CuspCharacteristic("sampled", deriv, {"t_min": float(t[0])}, t_floor=float(t[0]))


def make_characteristic(kind: str, **params) -> CuspCharacteristic:
    """Build and certify a cusp characteristic.

    kind = "power" (alpha >= 1), "exponential" (alpha, beta > 0) or
    "sampled" (t=..., r=... arrays).
    """
    if kind == "power":
        alpha = float(params["alpha"])
        if alpha < 1:
            raise ValueError("power characteristic needs alpha >= 1 (divergence fails below)")
        prof = _power_profile(alpha)
    elif kind == "exponential":
        alpha = float(params["alpha"])
        beta = float(params["beta"])
        if alpha <= 0 or beta <= 0:
            raise ValueError("exponential characteristic needs alpha, beta > 0")
        prof = _exponential_profile(alpha, beta)
    elif kind == "sampled":
        prof = _sampled_profile(params["t"], params["r"])
    else:
        raise ValueError(f"unknown characteristic kind {kind!r}")
    return prof.certify()


def validate_characteristic(R: CuspCharacteristic, j_max: int = 4, grid=None) -> list[float]:
    """Grid suprema c(j) of |R^(j-1) d^j R| for j = 1..j_max."""
    if j_max > 4:
        raise ValueError("scaled-derivative bounds available for j <= 4 only")
    if grid is None:
        grid = np.geomspace(max(R.t_floor, 1e-10), 1.0, 2048)
    grid = np.asarray(grid, dtype=float)
    vals = R(grid)
    out = []
    for j in range(1, j_max + 1):
        d = R.deriv(grid, j)
        if np.any(~np.isfinite(d)):
            raise ValueError(f"non-finite derivative sample at order {j}")
        out.append(float(np.max(np.abs(vals ** (j - 1) * d))))
    return out


# ---------------------------------------------------------------------------
# arclength reparametrization rho(s) = int_s^1 dt / R(t)
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WTS = leggauss(8)


def _integral_inv(R: CuspCharacteristic, a: float, b: float, panels_per_decade: int = 256) -> float:
    """Composite Gauss integral of 1/R over [a, b] on geometric panels."""
    if b <= a:
        return 0.0
    n = max(8, int(np.ceil(np.log10(b / a) * panels_per_decade)))
    edges = np.geomspace(a, b, n + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = 1.0 / R(pts.ravel())
    return float(np.sum(vals.reshape(pts.shape) * _GL_WTS[None, :] * half[:, None]))


class ArclengthMap:
    """Monotone decreasing map rho: (0, 1] -> [0, inf), rho(s) = int_s^1 dt/R.

    Evaluation is by cached cumulative Gauss quadrature on a fine geometric
    master grid plus a local correction panel; the inverse is bracketed
    root-finding refined to 1e-12.
    """

    def __init__(self, R: CuspCharacteristic, t_floor: float | None = None, n_master: int = 8192):
        self.R = R
        lo = max(R.t_floor, t_floor if t_floor is not None else 1e-10)
        self._master = np.geomspace(lo, 1.0, n_master + 1)
        mids = 0.5 * (self._master[1:] + self._master[:-1])
        half = 0.5 * np.diff(self._master)
        pts = mids[:, None] + half[:, None] * _GL_NODES[None, :]
        vals = (1.0 / R(pts.ravel())).reshape(pts.shape)
        panel = np.sum(vals * _GL_WTS[None, :] * half[:, None], axis=1)
        # rho at master nodes, accumulated from t = 1 downwards
        self._rho = np.concatenate([np.cumsum(panel[::-1])[::-1], [0.0]])

    def __call__(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s_arr < self._master[0]) or np.any(s_arr > 1.0 + 1e-15):
            raise ValueError("arclength map evaluated outside its resolvable range")
        out = self._rho_vec(np.clip(s_arr, self._master[0], 1.0))
        return out if np.ndim(s) else float(out[0])

    def _rho_vec(self, t: np.ndarray) -> np.ndarray:
        """Vectorized rho: anchored at the next master node, one Gauss panel."""
        k = np.clip(np.searchsorted(self._master, t, side="right") - 1, 0, len(self._master) - 2)
        hi = self._master[k + 1]
        mid = 0.5 * (hi + t)
        half = 0.5 * (hi - t)
        pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        vals = (1.0 / self.R(np.clip(pts, self._master[0], 1.0).ravel())).reshape(pts.shape)
        return self._rho[k + 1] + np.sum(vals * _GL_WTS[None, :], axis=1) * half

    def inverse(self, s_values):
        """t with rho(t) = s, elementwise; bracketed Newton to 1e-12 in t."""
        vals = np.atleast_1d(np.asarray(s_values, dtype=float))
        if np.any(vals < -1e-12) or np.any(vals > self._rho[0]):
            raise ValueError("inverse arclength target outside resolvable range")
        target = np.clip(vals, 0.0, None)
        rho_desc = self._rho
        # bracketing master interval (rho decreasing in t)
        k = len(rho_desc) - 1 - np.searchsorted(rho_desc[::-1], target, side="left")
        k = np.clip(k, 0, len(self._master) - 2)
        lo = self._master[np.maximum(k - 1, 0)].copy()
        hi = self._master[np.minimum(k + 2, len(self._master) - 1)].copy()
        t = np.clip(np.interp(-target, -rho_desc, self._master), lo, hi)
        for _ in range(60):
            resid = self._rho_vec(t) - target
            # keep the bracket: rho decreasing means resid > 0 left of the root
            lo = np.where(resid > 0, np.maximum(lo, t), lo)
            hi = np.where(resid <= 0, np.minimum(hi, t), hi)
            step = resid * self.R(t)  # Newton with d(rho)/dt = -1/R
            t_new = t + step
            bad = (t_new <= lo) | (t_new >= hi)
            t_new = np.where(bad, 0.5 * (lo + hi), t_new)
            done = np.abs(t_new - t) <= 1e-13 * np.abs(t_new) + 1e-15
            t = t_new
            if bool(np.all(done)):
                break
        t = np.where(target <= 0.0, 1.0, t)
        return t if np.ndim(s_values) else float(t[0])


def arclength_map(R: CuspCharacteristic, **kw) -> ArclengthMap:
    return ArclengthMap(R, **kw)
