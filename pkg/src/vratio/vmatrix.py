"""V-matrices: Gram structure of indicator functions under the L2[0,u] inner product.

The entry for a pair of points a, b is the volume of the sub-box where both
step functions theta(x - a) and theta(x - b) are one:

    prod_k [u^k - max(a^k, b^k)]
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import DimensionMismatchError, ScaledSamples, as_points


class VDomainError(ValueError):
    """A point coordinate exceeds the box upper limit."""


def _resolve_u(d: int, u) -> np.ndarray:
    if u is None:
        return np.ones(d)
    uu = np.atleast_1d(np.asarray(u, dtype=float))
    if uu.shape[0] != d:
        raise DimensionMismatchError(f"u has dimension {uu.shape[0]}, points have {d}")
    return uu


def v_entry(a, b, u=None) -> float:
    """Overlap volume prod_k (u^k - max(a^k, b^k)); u defaults to all ones."""
    av = np.atleast_1d(np.asarray(a, dtype=float))
    bv = np.atleast_1d(np.asarray(b, dtype=float))
    if av.shape != bv.shape:
        raise DimensionMismatchError("a and b must share dimension")
    uu = _resolve_u(av.shape[0], u)
    mx = np.maximum(av, bv)
    if np.any(mx > uu):
        raise VDomainError("max(a, b) exceeds u in some coordinate")
    return float(np.prod(uu - mx))


def cross_v(rows, cols, u=None) -> np.ndarray:
    """Matrix of v_entry values for all row x column point pairs."""
    rp = as_points(rows)
    cp = as_points(cols)
    if rp.shape[1] != cp.shape[1]:
        raise DimensionMismatchError("row and column points must share dimension")
    uu = _resolve_u(rp.shape[1], u)
    if np.any(rp > uu) or np.any(cp > uu):
        raise VDomainError("a point coordinate exceeds u")
    out = np.ones((rp.shape[0], cp.shape[0]))
    for k in range(rp.shape[1]):
        out *= uu[k] - np.maximum.outer(rp[:, k], cp[:, k])
    return out


@dataclass(frozen=True)
class VMatrices:
    """The n x n denominator Gram matrix and the n x ell denominator-numerator cross matrix."""

    v_dd: np.ndarray
    v_dn: np.ndarray

    @property
    def n(self) -> int:
        return self.v_dd.shape[0]

    @property
    def ell(self) -> int:
        return self.v_dn.shape[1]


def build_v_matrices(s: ScaledSamples) -> VMatrices:
    """Build V'' (denominator x denominator) and V' (denominator x numerator)."""
    v_dd = cross_v(s.x_prime, s.x_prime, s.u)
    v_dn = cross_v(s.x_prime, s.x, s.u)
    # maximum.outer is exactly symmetric, so v_dd is symmetric by construction
    return VMatrices(v_dd, v_dn)


def l2_residual(s: ScaledSamples, r) -> float:
    """Exact squared L2 distance between the weighted denominator and numerator
    empirical measures, including the r-independent term.

    Expands to (1/n^2) r'V''r - (2/(n ell)) r'V'1 + (1/ell^2) 1'V'''1 where
    V''' collects overlap volumes of numerator pairs.
    """
    rv = np.atleast_1d(np.asarray(r, dtype=float))
    if rv.shape[0] != s.n:
        raise ValueError(f"r has length {rv.shape[0]}, expected n={s.n}")
    vm = build_v_matrices(s)
    v_nn = cross_v(s.x, s.x, s.u)
    ones = np.ones(s.ell)
    val = (
        rv @ vm.v_dd @ rv / s.n**2
        - 2.0 * (rv @ vm.v_dn @ ones) / (s.n * s.ell)
        + ones @ v_nn @ ones / s.ell**2
    )
    # round-off can push an exact zero slightly negative
    return max(float(val), 0.0)
