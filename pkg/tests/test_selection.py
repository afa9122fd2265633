import numpy as np
import pytest

from vratio import selection
from vratio.domain import DomainBox, ScaledSamples
from vratio.estimators import Method, fit_dre_v
from vratio.selection import (
    CvPlan,
    SelectionError,
    cross_validate,
    default_gamma_grid,
    default_sigma2_grid,
    ls_criterion,
    make_folds,
    median_sigma2,
)
from vratio.vmatrix import build_v_matrices


def unit_samples(rng, n, ell, d):
    box = DomainBox(np.zeros(d), np.ones(d))
    return ScaledSamples(rng.random((n, d)), rng.random((ell, d)), box)


def test_default_gamma_grid():
    grid = default_gamma_grid()
    assert grid.shape == (15,)
    assert grid[0] == pytest.approx(1e-5)
    assert grid[-1] == pytest.approx(10.0)
    assert np.all(np.diff(np.log(grid)) > 0)


def test_median_sigma2_two_points():
    assert median_sigma2(np.array([[0.0], [1.0]])) == 1.0


def test_median_sigma2_degenerate():
    # all points coincide: the zero median falls back to a positive width
    assert median_sigma2(np.zeros((5, 2))) > 0.0
    assert median_sigma2(np.array([[0.3]])) == 1.0


def test_default_sigma2_grid_scales_median():
    pts = np.array([[0.0], [1.0]])
    grid = default_sigma2_grid(pts, multipliers=(0.5, 2.0))
    assert np.allclose(grid, [0.5, 2.0])


def test_cv_plan_validation():
    with pytest.raises(ValueError):
        CvPlan(gamma_grid=np.array([]))
    with pytest.raises(ValueError):
        CvPlan(gamma_grid=np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        CvPlan(sigma2_grid=np.array([-1.0]))
    with pytest.raises(ValueError):
        CvPlan(k=1)
    plan = CvPlan(gamma_grid=np.array([1.0, 0.01]))
    assert np.all(np.diff(plan.gamma_grid) > 0)  # sorted on construction


def test_make_folds_partition():
    num_folds, den_folds = make_folds(23, 17, 4, seed=5)
    assert len(num_folds) == 4 and len(den_folds) == 4
    assert np.array_equal(np.sort(np.concatenate(num_folds)), np.arange(17))
    assert np.array_equal(np.sort(np.concatenate(den_folds)), np.arange(23))
    sizes = [len(f) for f in den_folds]
    assert max(sizes) - min(sizes) <= 1


def test_make_folds_deterministic():
    a = make_folds(20, 20, 5, seed=7)
    b = make_folds(20, 20, 5, seed=7)
    c = make_folds(20, 20, 5, seed=8)
    assert all(np.array_equal(x, y) for x, y in zip(a[0] + a[1], b[0] + b[1]))
    assert any(not np.array_equal(x, y) for x, y in zip(a[0] + a[1], c[0] + c[1]))


def test_make_folds_rejects_too_many_folds():
    with pytest.raises(ValueError):
        make_folds(3, 10, 4, seed=0)


def test_ls_criterion_hand_computed():
    rng = np.random.default_rng(50)
    s = unit_samples(rng, 10, 10, 1)
    est = fit_dre_v(s, 0.1)
    # point-values estimate: use the fit points themselves as holdout
    val = ls_criterion(est, s.x_prime, s.x_prime, 1.0)
    r = est.coef
    assert val == pytest.approx(0.5 * np.sum(r**2) - np.sum(r))


def test_cross_validate_report_structure():
    rng = np.random.default_rng(51)
    s = unit_samples(rng, 40, 40, 1)
    plan = CvPlan(k=4, seed=3)
    report = cross_validate(s, Method.DRE_V, plan)
    assert report.method is Method.DRE_V
    assert report.selected_sigma2 is None
    assert report.failures == 0
    assert len(report.candidates) == len(plan.gamma_grid)
    assert report.selected_gamma in {c.gamma for c in report.candidates}
    best = min(c.criterion for c in report.candidates if c.ok)
    chosen = [c for c in report.candidates if c.gamma == report.selected_gamma][0]
    assert chosen.criterion == best
    preds = report.estimate.predict_scaled(s.x_prime)
    assert preds.shape == (40,)


def test_cross_validate_rbf_selects_sigma2():
    rng = np.random.default_rng(52)
    s = unit_samples(rng, 30, 30, 1)
    plan = CvPlan(k=3, sigma2_grid=np.array([0.1, 1.0]))
    report = cross_validate(s, Method.DRE_VK_RBF, plan)
    assert report.selected_sigma2 in (0.1, 1.0)
    assert len(report.candidates) == 2 * len(plan.gamma_grid)


def test_cross_validate_scaled_gammas_are_grid_multiples():
    rng = np.random.default_rng(53)
    s = unit_samples(rng, 25, 25, 2)
    plan = CvPlan(k=5, gamma_grid=np.array([1e-3, 1e-1]), scale_gamma=True)
    report = cross_validate(s, Method.DRE_V, plan)
    tr = np.trace(build_v_matrices(s).v_dd)
    assert np.allclose([c.gamma for c in report.candidates], [1e-3 * tr, 1e-1 * tr])


def test_cross_validate_unscaled_gammas_match_grid():
    rng = np.random.default_rng(54)
    s = unit_samples(rng, 25, 25, 1)
    plan = CvPlan(k=5, gamma_grid=np.array([1e-2, 1.0]), scale_gamma=False)
    report = cross_validate(s, Method.DRE_V, plan)
    assert [c.gamma for c in report.candidates] == [1e-2, 1.0]


def test_cross_validate_deterministic_given_seed():
    rng = np.random.default_rng(55)
    s = unit_samples(rng, 30, 30, 1)
    plan = CvPlan(k=5, seed=11)
    r1 = cross_validate(s, Method.DRE_VK_INK, plan)
    r2 = cross_validate(s, Method.DRE_VK_INK, plan)
    assert r1.selected_gamma == r2.selected_gamma
    assert np.array_equal(r1.estimate.coef, r2.estimate.coef)


def test_cross_validate_all_failures_raise(monkeypatch):
    rng = np.random.default_rng(56)
    s = unit_samples(rng, 20, 20, 1)

    def boom(*args, **kwargs):
        raise selection.SingularSystemError("forced failure")

    monkeypatch.setattr(selection, "_fold_fit", boom)
    with pytest.raises(SelectionError):
        cross_validate(s, Method.DRE_V, CvPlan(k=4))


def test_cross_validate_too_few_points_for_folds():
    rng = np.random.default_rng(57)
    s = unit_samples(rng, 3, 20, 1)
    with pytest.raises(ValueError):
        cross_validate(s, Method.DRE_V, CvPlan(k=5))
