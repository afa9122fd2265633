"""k-fold cross-validation of the regularization constant (and RBF bandwidth)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .domain import ScaledSamples
from .estimators import (
    Method,
    RatioEstimate,
    Variant,
    fit_dre_v_expansion,
    fit_dre_vk,
    fit_ulsif_like,
    kernel_spec_for,
    rect_identity_ones,
)
from .kernels import cross_gram
from .solve import PsdPencilSolver, SingularSystemError, solve_regularized
from .vmatrix import build_v_matrices

DEFAULT_SIGMA2_MULTIPLIERS = (0.1, 0.25, 0.5, 1.0, 2.0, 4.0)


class SelectionError(RuntimeError):
    """Every candidate failed to solve."""


def default_gamma_grid() -> np.ndarray:
    """Log grid of regularization multipliers.

    By default the grid entries are interpreted relative to the mean
    eigenvalue of the system operator (see CvPlan.scale_gamma), which keeps
    one grid meaningful across dimensions and kernels: the operator norm of
    the overlap-volume matrices shrinks geometrically with the dimension.
    """
    return np.logspace(-5.0, 1.0, 15)


def median_sigma2(pooled_points) -> float:
    """Median pairwise squared distance of the pooled scaled data."""
    pts = np.asarray(pooled_points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] < 2:
        return 1.0
    med = float(np.median(pdist(pts, "sqeuclidean")))
    if med <= 0.0:
        med = max(float(np.mean(pdist(pts, "sqeuclidean"))), 1e-2)
    return med


def default_sigma2_grid(pooled_points, multipliers=DEFAULT_SIGMA2_MULTIPLIERS) -> np.ndarray:
    return np.asarray(multipliers, dtype=float) * median_sigma2(pooled_points)


@dataclass
class CvPlan:
    k: int = 5
    gamma_grid: np.ndarray = field(default_factory=default_gamma_grid)
    sigma2_grid: np.ndarray | None = None  # RBF only; None -> median heuristic grid
    seed: int = 0
    # interpret gamma_grid as multipliers of tr(M)/n for the method's system
    # matrix M; False means absolute values
    scale_gamma: bool = True
    # used when sigma2_grid is None: multipliers of the median pairwise
    # squared distance of the pooled scaled data
    sigma2_multipliers: tuple = DEFAULT_SIGMA2_MULTIPLIERS

    def __post_init__(self):
        self.gamma_grid = np.sort(np.asarray(self.gamma_grid, dtype=float))
        if self.gamma_grid.size == 0 or np.any(self.gamma_grid <= 0):
            raise ValueError("gamma grid must be nonempty and positive")
        if self.sigma2_grid is not None:
            self.sigma2_grid = np.sort(np.asarray(self.sigma2_grid, dtype=float))
            if self.sigma2_grid.size == 0 or np.any(self.sigma2_grid <= 0):
                raise ValueError("sigma2 grid must be nonempty and positive")
        if self.k < 2:
            raise ValueError("fold count must be at least 2")


@dataclass(frozen=True)
class Candidate:
    gamma: float
    sigma2: float | None
    criterion: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class CvReport:
    method: Method
    candidates: list
    selected_gamma: float
    selected_sigma2: float | None
    folds_numerator: list
    folds_denominator: list
    estimate: RatioEstimate
    failures: int


def make_folds(n: int, ell: int, k: int, seed: int):
    """Independently shuffle both index sets and split each into k near-equal parts.

    Returns (numerator_folds, denominator_folds), each a list of k holdout
    index arrays.
    """
    if k > min(n, ell):
        raise ValueError(f"k={k} exceeds min(n, ell)={min(n, ell)}")
    if k < 2:
        raise ValueError("fold count must be at least 2")
    rng = np.random.default_rng(seed)
    num_folds = np.array_split(rng.permutation(ell), k)
    den_folds = np.array_split(rng.permutation(n), k)
    return num_folds, den_folds


def ls_criterion(est: RatioEstimate, holdout_num, holdout_den, n_over_l: float) -> float:
    """Least-squares criterion 0.5 sum r(z')^2 - (n/ell) sum r(z) on scaled holdout points."""
    pred_den = est.predict_scaled(holdout_den)
    pred_num = est.predict_scaled(holdout_num)
    return float(0.5 * np.sum(pred_den**2) - n_over_l * np.sum(pred_num))


def _gamma_scale(method: Method, s: ScaledSamples, sigma2) -> float:
    """Mean eigenvalue tr(M)/n of the method's full-data system matrix M.

    For the point-value fit the ridge enters as gamma/n, so the scale is
    tr(V'') (making the effective ridge a multiple of tr(V'')/n); for the
    kernel fits M is V''K or KK with the ridge applied directly.
    """
    if method is Method.DRE_V:
        scale = float(np.trace(build_v_matrices(s).v_dd))
    else:
        spec = kernel_spec_for(method, s.d, sigma2)
        K = cross_gram(spec, s.x_prime, s.x_prime)
        if method is Method.ULSIF_LIKE:
            scale = float(np.sum(K * K)) / s.n
        else:
            vdd = build_v_matrices(s).v_dd
            scale = float(np.sum(vdd * K)) / s.n  # tr(V''K), both symmetric
    if not np.isfinite(scale) or scale <= 0.0:
        return 1.0
    return scale


def _fold_fit(method, sub, gamma, sigma2, cache):
    """Fit one candidate on a training fold, reusing fold-level matrices in `cache`."""
    if method is Method.DRE_V:
        if "pencil" not in cache:
            vm = build_v_matrices(sub)
            cache["pencil"] = PsdPencilSolver(vm.v_dd)
            cache["rhs"] = (sub.n / sub.ell) * (vm.v_dn @ np.ones(sub.ell))
        rep = cache["pencil"].solve(gamma / sub.n, cache["rhs"], context=f"gamma={gamma}")
        return RatioEstimate(Variant.V_EXPANSION, rep.solution, sub.x_prime, sub.box, gamma)

    spec = kernel_spec_for(method, sub.d, sigma2)
    key = ("K", sigma2)
    if key not in cache:
        cache[key] = cross_gram(spec, sub.x_prime, sub.x_prime)
    K = cache[key]
    if method is Method.ULSIF_LIKE:
        mkey = ("KK", sigma2)
        if mkey not in cache:
            cache[mkey] = (K @ K, (sub.n / sub.ell) * (K @ rect_identity_ones(sub.n, sub.ell)))
        M, b = cache[mkey]
        rep = solve_regularized(M, gamma, b, context=f"gamma={gamma}")
        return RatioEstimate(Variant.KERNEL_EXPANSION, rep.solution, sub.x_prime, sub.box, gamma, spec)

    if "vm" not in cache:
        vm = build_v_matrices(sub)
        cache["vm"] = vm
        cache["rhs"] = (sub.n / sub.ell) * (vm.v_dn @ np.ones(sub.ell))
    mkey = ("VK", sigma2)
    if mkey not in cache:
        cache[mkey] = cache["vm"].v_dd @ K
    rep = solve_regularized(cache[mkey], gamma, cache["rhs"], context=f"gamma={gamma}")
    return RatioEstimate(Variant.KERNEL_EXPANSION, rep.solution, sub.x_prime, sub.box, gamma, spec)


def _final_fit(method, s, gamma, sigma2) -> RatioEstimate:
    if method is Method.DRE_V:
        return fit_dre_v_expansion(s, gamma)
    spec = kernel_spec_for(method, s.d, sigma2)
    if method is Method.ULSIF_LIKE:
        return fit_ulsif_like(s, spec, gamma)
    return fit_dre_vk(s, spec, gamma)


def cross_validate(s: ScaledSamples, method: Method, plan: CvPlan) -> CvReport:
    """Grid-search gamma (and sigma2 for RBF) by k-fold CV, then refit on all data.

    The fold criterion sums are deterministic given the plan seed; ties are
    broken toward the larger gamma. Candidates whose solve fails on any fold
    are recorded and excluded from selection.
    """
    if plan.k > min(s.n, s.ell):
        raise ValueError(f"k={plan.k} exceeds min(n, ell)={min(s.n, s.ell)}")
    uses_rbf = method in (Method.DRE_VK_RBF, Method.ULSIF_LIKE)
    if uses_rbf:
        sigma2_grid = (
            plan.sigma2_grid
            if plan.sigma2_grid is not None
            else default_sigma2_grid(s.pooled(), plan.sigma2_multipliers)
        )
        sigma2_values = [float(v) for v in sigma2_grid]
    else:
        sigma2_values = [None]

    scales = {s2: _gamma_scale(method, s, s2) if plan.scale_gamma else 1.0
              for s2 in sigma2_values}
    pairs = [(float(g) * scales[s2], s2) for s2 in sigma2_values for g in plan.gamma_grid]
    totals = {p: 0.0 for p in pairs}
    errors = {p: None for p in pairs}

    num_folds, den_folds = make_folds(s.n, s.ell, plan.k, plan.seed)
    n_over_l = s.n / s.ell
    all_num = np.arange(s.ell)
    all_den = np.arange(s.n)

    for num_hold, den_hold in zip(num_folds, den_folds):
        num_train = np.setdiff1d(all_num, num_hold)
        den_train = np.setdiff1d(all_den, den_hold)
        sub = s.subset(num_train, den_train)
        hold_num = s.x[num_hold]
        hold_den = s.x_prime[den_hold]
        cache = {}
        for pair in pairs:
            if errors[pair] is not None:
                continue
            gamma, sigma2 = pair
            try:
                est = _fold_fit(method, sub, gamma, sigma2, cache)
                totals[pair] += ls_criterion(est, hold_num, hold_den, n_over_l)
            except SingularSystemError as exc:
                errors[pair] = str(exc)

    candidates = [
        Candidate(g, s2, totals[(g, s2)] if errors[(g, s2)] is None else np.nan, errors[(g, s2)])
        for (g, s2) in pairs
    ]
    valid = [c for c in candidates if c.ok]
    if not valid:
        detail = "; ".join(f"gamma={c.gamma:g}: {c.error}" for c in candidates[:5])
        raise SelectionError(f"all {len(candidates)} candidates failed to solve: {detail}")

    best = None
    for cand in valid:  # grid order: sigma2 then gamma, both ascending
        if best is None or cand.criterion < best.criterion or (
            cand.criterion == best.criterion and cand.gamma >= best.gamma
        ):
            best = cand

    estimate = _final_fit(method, s, best.gamma, best.sigma2)
    return CvReport(
        method=method,
        candidates=candidates,
        selected_gamma=best.gamma,
        selected_sigma2=best.sigma2,
        folds_numerator=[f.copy() for f in num_folds],
        folds_denominator=[f.copy() for f in den_folds],
        estimate=estimate,
        failures=sum(1 for c in candidates if not c.ok),
    )
