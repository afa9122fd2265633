"""Kernels for the RKHS estimator: linear INK-spline (parameter-free) and Gaussian RBF."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .domain import DimensionMismatchError, as_points


class KernelKind(enum.Enum):
    INK_SPLINE_LINEAR = "ink-spline-linear"
    RBF = "rbf"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    d: int
    sigma2: float | None = None

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be positive")
        if self.kind is KernelKind.RBF:
            if self.sigma2 is None or self.sigma2 <= 0:
                raise ValueError("RBF kernel requires sigma2 > 0")
        elif self.sigma2 is not None:
            raise ValueError("the linear INK-spline kernel has no parameters")


def ink1(x, y):
    """Closed form of the linear infinite-knot spline kernel on [0, u].

    K1(x, y) = 1 + xy + |x - y| min(x,y)^2 / 2 + min(x,y)^3 / 3.
    Accepts scalars or same-shaped arrays; inputs must be nonnegative.
    """
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if np.any(xv < 0) or np.any(yv < 0):
        raise ValueError("ink1 is defined on nonnegative inputs only")
    mn = np.minimum(xv, yv)
    out = 1.0 + xv * yv + 0.5 * np.abs(xv - yv) * mn**2 + mn**3 / 3.0
    return float(out) if out.ndim == 0 else out


def cross_gram(spec: KernelSpec, rows, cols) -> np.ndarray:
    """Kernel matrix k(rows_i, cols_j)."""
    rp = as_points(rows)
    cp = as_points(cols)
    if rp.shape[1] != spec.d or cp.shape[1] != spec.d:
        raise DimensionMismatchError(
            f"points have dimensions {rp.shape[1]}/{cp.shape[1]}, kernel expects {spec.d}"
        )
    if spec.kind is KernelKind.RBF:
        sq = cdist(rp, cp, "sqeuclidean")
        return np.exp(-sq / (2.0 * spec.sigma2))
    if np.any(rp < 0) or np.any(cp < 0):
        raise ValueError("INK-spline inputs must be nonnegative")
    out = np.ones((rp.shape[0], cp.shape[0]))
    for k in range(spec.d):
        xk = rp[:, k]
        yk = cp[:, k]
        mn = np.minimum.outer(xk, yk)
        out *= 1.0 + np.outer(xk, yk) + 0.5 * np.abs(xk[:, None] - yk[None, :]) * mn**2 + mn**3 / 3.0
    return out


def gram(spec: KernelSpec, points) -> np.ndarray:
    """Symmetric kernel Gram matrix of a point set."""
    return cross_gram(spec, points, points)


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Kernel value at a single pair of d-vectors."""
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    yv = np.atleast_1d(np.asarray(y, dtype=float))
    return float(cross_gram(spec, xv[None, :], yv[None, :])[0, 0])
