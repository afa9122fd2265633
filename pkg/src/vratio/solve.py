"""Dense solvers for the regularized normal systems.

All accepted direct solutions are verified by substitution against the
residual bound ||Ax - b|| <= RESIDUAL_RTOL * (1 + ||b||).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

RESIDUAL_RTOL = 1e-8


class SolveMethod(enum.Enum):
    DIRECT = "direct"
    PROJECTED_GRADIENT = "projected-gradient"
    EIG_PENCIL = "eig-pencil"


class SingularSystemError(RuntimeError):
    """The system is singular to working precision."""


@dataclass(frozen=True)
class SolveReport:
    solution: np.ndarray
    residual_norm: float
    method: SolveMethod


def _check_square(A: np.ndarray, b: np.ndarray):
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be a square matrix")
    if b.shape != (A.shape[0],):
        raise ValueError(f"b has shape {b.shape}, expected ({A.shape[0]},)")


def solve_regularized(A, ridge: float, b, ridge_matrix=None, context: str = "") -> SolveReport:
    """Solve (A + ridge * R) x = b with R the identity or a given matrix.

    Uses an LU factorization with iterative refinement; raises
    SingularSystemError when the substitution check cannot be met.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_square(A, b)
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    m = A.shape[0]
    if ridge_matrix is None:
        M = A + ridge * np.eye(m)
    else:
        R = np.asarray(ridge_matrix, dtype=float)
        if R.shape != A.shape:
            raise ValueError("ridge_matrix must match the shape of A")
        M = A + ridge * R

    bound = RESIDUAL_RTOL * (1.0 + np.linalg.norm(b))
    try:
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
        x = scipy.linalg.lu_solve((lu, piv), b, check_finite=False)
        for _ in range(3):
            res = b - M @ x
            res_norm = float(np.linalg.norm(res))
            if not np.isfinite(res_norm) or res_norm <= bound:
                break
            x = x + scipy.linalg.lu_solve((lu, piv), res, check_finite=False)
        res_norm = float(np.linalg.norm(M @ x - b))
    except scipy.linalg.LinAlgError:
        res_norm = np.inf
        x = np.full(m, np.nan)

    if not np.isfinite(res_norm) or not np.all(np.isfinite(x)) or res_norm > bound:
        where = f" ({context})" if context else ""
        raise SingularSystemError(
            f"system singular to working precision{where}: residual {res_norm:.3e} > {bound:.3e}"
        )
    return SolveReport(x, res_norm, SolveMethod.DIRECT)


class PsdPencilSolver:
    """Reusable solver for (S @ S + c * S) x = b with S symmetric PSD.

    The pencil can be exactly singular (S may have zero rows), but the
    right-hand sides arising here are orthogonal to the null space, so the
    minimal-norm eigen-solution satisfies the residual check. The
    eigendecomposition is computed once and shared across values of c.
    """

    def __init__(self, S):
        S = np.asarray(S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ValueError("S must be square")
        if not np.allclose(S, S.T, atol=1e-10 * (1.0 + np.abs(S).max())):
            raise ValueError("S must be symmetric")
        self._S = S
        w, Q = scipy.linalg.eigh(S)
        w = np.clip(w, 0.0, None)
        self._w = w
        self._Q = Q
        wmax = float(w.max()) if w.size else 0.0
        self._null = w <= np.finfo(float).eps * max(wmax, 1.0) * S.shape[0]

    def solve(self, c: float, b, context: str = "") -> SolveReport:
        b = np.asarray(b, dtype=float)
        if b.shape != (self._S.shape[0],):
            raise ValueError("b length mismatch")
        if c < 0:
            raise ValueError("c must be nonnegative")
        denom = self._w * (self._w + c)
        coef = self._Q.T @ b
        inv = np.where(self._null, 0.0, coef / np.where(self._null, 1.0, denom))
        x = self._Q @ inv
        Sx = self._S @ x
        res_norm = float(np.linalg.norm(self._S @ Sx + c * Sx - b))
        bound = RESIDUAL_RTOL * (1.0 + np.linalg.norm(b))
        if not np.isfinite(res_norm) or res_norm > bound:
            where = f" ({context})" if context else ""
            raise SingularSystemError(
                f"pencil system inconsistent{where}: residual {res_norm:.3e} > {bound:.3e}"
            )
        return SolveReport(x, res_norm, SolveMethod.EIG_PENCIL)


def solve_psd_pencil(S, c: float, b, context: str = "") -> SolveReport:
    """One-shot interface to PsdPencilSolver."""
    return PsdPencilSolver(S).solve(c, b, context=context)


def solve_nonneg(A, b, max_iter: int = 100_000, tol: float = 1e-10, callback=None) -> SolveReport:
    """Minimize 0.5 x'Ax - b'x subject to x >= 0 by projected gradient.

    Step size 1/L with L the infinity-norm bound on the spectral radius.
    Stops when the projected gradient norm drops below `tol`.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_square(A, b)
    if not np.allclose(A, A.T, atol=1e-10 * (1.0 + np.abs(A).max())):
        raise ValueError("A must be symmetric")
    L = float(np.abs(A).sum(axis=1).max())
    if L <= 0:
        L = 1.0
    x = np.zeros_like(b)
    for _ in range(max_iter):
        g = A @ x - b
        pg = np.where(x > 0, g, np.minimum(g, 0.0))
        if np.linalg.norm(pg) <= tol:
            break
        x = np.maximum(x - g / L, 0.0)
        if callback is not None:
            callback(x)
    res_norm = float(np.linalg.norm(A @ x - b))
    return SolveReport(x, res_norm, SolveMethod.PROJECTED_GRADIENT)
