"""Cubic B-spline basis over a covariate interval.

A basis of K >= 4 cubic B-splines is built on equidistant knots with the
boundary knots repeated four times (a clamped basis).  The raw covariate
interval is affinely rescaled to [0, 1] before knot placement for
conditioning; the map is stored with the basis, so evaluation takes raw
covariate values (e.g. years).  Evaluation outside the interval is an
error, not an extrapolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["SplineBasis", "make_basis", "eval_basis", "eval_basis_deriv", "design_matrix"]

DEGREE = 3


@dataclass(frozen=True)
class SplineBasis:
    """Clamped cubic B-spline system: K basis functions on ``domain``.

    ``knots`` live on the unit interval and have length K + 4, with 0 and 1
    each repeated four times and K - 4 equidistant interior knots.
    """

    num_basis: int
    domain: tuple[float, float]
    knots: np.ndarray = field(repr=False)
    degree: int = DEGREE

    @property
    def unit_scale(self) -> float:
        """d(unit coordinate)/d(raw coordinate)."""
        return 1.0 / (self.domain[1] - self.domain[0])

    def to_unit(self, x) -> np.ndarray:
        """Map raw covariate values into [0, 1], erroring outside the domain."""
        lo, hi = self.domain
        u = (np.asarray(x, dtype=float) - lo) / (hi - lo)
        tol = 1e-12
        if np.any(u < -tol) or np.any(u > 1.0 + tol):
            raise ValueError(f"covariate outside the fitted domain [{lo}, {hi}]")
        return np.clip(u, 0.0, 1.0)


def make_basis(K: int, domain) -> SplineBasis:
    """Build K cubic B-splines with equidistant knots over ``domain``."""
    if K < 4:
        raise ValueError(f"a cubic basis needs K >= 4 basis functions, got {K}")
    lo, hi = float(domain[0]), float(domain[1])
    if not hi > lo:
        raise ValueError(f"degenerate domain [{lo}, {hi}]")
    sites = np.linspace(0.0, 1.0, K - 2)  # boundary-inclusive distinct knot sites
    knots = np.concatenate([np.zeros(DEGREE), sites, np.ones(DEGREE)])
    return SplineBasis(num_basis=K, domain=(lo, hi), knots=knots)


def _find_span(basis: SplineBasis, u: float) -> int:
    # span j with t[j] <= u < t[j+1]; u == 1 falls in the last nonempty span
    t = basis.knots
    K = basis.num_basis
    if u >= 1.0:
        return K - 1
    j = int(np.searchsorted(t, u, side="right")) - 1
    return min(max(j, DEGREE), K - 1)


def _basis_values(t: np.ndarray, span: int, u: float, degree: int) -> np.ndarray:
    # Cox-de Boor triangle: values of the degree+1 splines alive on this span
    values = np.empty(degree + 1)
    left = np.empty(degree + 1)
    right = np.empty(degree + 1)
    values[0] = 1.0
    for r in range(1, degree + 1):
        left[r] = u - t[span + 1 - r]
        right[r] = t[span + r] - u
        saved = 0.0
        for s in range(r):
            denom = right[s + 1] + left[r - s]
            temp = values[s] / denom
            values[s] = saved + right[s + 1] * temp
            saved = left[r - s] * temp
        values[r] = saved
    return values


def eval_basis(basis: SplineBasis, x: float) -> np.ndarray:
    """All K basis values at a raw covariate point; at most 4 are nonzero."""
    u = float(basis.to_unit(x))
    span = _find_span(basis, u)
    vals = _basis_values(basis.knots, span, u, basis.degree)
    out = np.zeros(basis.num_basis)
    out[span - basis.degree : span + 1] = vals
    return out


def eval_basis_deriv(basis: SplineBasis, x: float) -> np.ndarray:
    """First derivatives of all K basis functions w.r.t. the raw covariate.

    Uses the degree-lowering formula
    ``B'_{i,3} = 3 * (B_{i,2}/(t_{i+3}-t_i) - B_{i+1,2}/(t_{i+4}-t_{i+1}))``
    then rescales by d(unit)/d(raw).
    """
    u = float(basis.to_unit(x))
    t = basis.knots
    d = basis.degree
    span = _find_span(basis, u)
    low = _basis_values(t, span, u, d - 1)  # degree-2 splines span-d+1 .. span

    def low_val(i: int) -> float:
        off = i - (span - d + 1)
        return low[off] if 0 <= off < d else 0.0

    out = np.zeros(basis.num_basis)
    for i in range(span - d, span + 1):
        acc = 0.0
        if t[i + d] > t[i]:
            acc += low_val(i) / (t[i + d] - t[i])
        if t[i + d + 1] > t[i + 1]:
            acc -= low_val(i + 1) / (t[i + d + 1] - t[i + 1])
        out[i] = d * acc
    return out * basis.unit_scale


def design_matrix(basis: SplineBasis, xs) -> np.ndarray:
    """Rows of basis values, one per covariate value: shape (n, K)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    out = np.empty((xs.size, basis.num_basis))
    for i, x in enumerate(xs):
        out[i] = eval_basis(basis, x)
    return out
