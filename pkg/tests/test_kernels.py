import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from vratio.kernels import KernelKind, KernelSpec, cross_gram, gram, ink1, kernel_eval


def ink1_integral(x, y):
    """Defining integral of the linear spline kernel with knots spread over
    [0, min(x, y)], plus the constant and linear terms."""
    val, _ = quad(lambda t: (x - t) * (y - t), 0.0, min(x, y))
    return 1.0 + x * y + val


def test_ink1_known_values():
    assert ink1(0.0, 0.0) == 1.0
    assert ink1(1.0, 1.0) == pytest.approx(7.0 / 3.0)
    assert ink1(0.5, 1.0) == pytest.approx(77.0 / 48.0)


def test_ink1_matches_integral_on_grid():
    pts = np.linspace(0.0, 1.0, 9)
    for x in pts:
        for y in pts:
            assert ink1(x, y) == pytest.approx(ink1_integral(x, y), abs=1e-6)


def test_ink1_vectorized():
    x = np.array([0.1, 0.5, 0.9])
    y = np.array([0.4, 0.5, 0.2])
    out = ink1(x, y)
    assert out.shape == (3,)
    for i in range(3):
        assert out[i] == pytest.approx(ink1(x[i], y[i]))


def test_ink1_rejects_negative():
    with pytest.raises(ValueError):
        ink1(-0.1, 0.5)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_ink1_symmetric(x, y):
    assert ink1(x, y) == ink1(y, x)


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec(KernelKind.RBF, d=1)  # missing width
    with pytest.raises(ValueError):
        KernelSpec(KernelKind.RBF, d=1, sigma2=-1.0)
    with pytest.raises(ValueError):
        KernelSpec(KernelKind.INK_SPLINE_LINEAR, d=1, sigma2=1.0)
    with pytest.raises(ValueError):
        KernelSpec(KernelKind.INK_SPLINE_LINEAR, d=0)


def test_ink_gram_is_coordinatewise_product():
    rng = np.random.default_rng(12)
    pts = rng.random((7, 3))
    spec = KernelSpec(KernelKind.INK_SPLINE_LINEAR, d=3)
    K = gram(spec, pts)
    for i in range(7):
        for j in range(7):
            expected = np.prod([ink1(pts[i, k], pts[j, k]) for k in range(3)])
            assert K[i, j] == pytest.approx(expected)


def test_rbf_known_value():
    spec = KernelSpec(KernelKind.RBF, d=2, sigma2=0.5)
    assert kernel_eval(spec, [0.0, 0.0], [0.0, 0.0]) == 1.0
    # squared distance 2 with 2 sigma^2 = 1
    assert kernel_eval(spec, [0.0, 0.0], [1.0, 1.0]) == pytest.approx(np.exp(-2.0))


@pytest.mark.parametrize(
    "spec",
    [
        KernelSpec(KernelKind.INK_SPLINE_LINEAR, d=2),
        KernelSpec(KernelKind.RBF, d=2, sigma2=0.3),
    ],
)
def test_gram_symmetric_psd(spec):
    rng = np.random.default_rng(13)
    for _ in range(10):
        pts = rng.random((20, 2))
        K = gram(spec, pts)
        assert np.allclose(K, K.T)
        assert np.linalg.eigvalsh(K).min() >= -1e-8


def test_cross_gram_shape_and_dimension_check():
    rng = np.random.default_rng(14)
    spec = KernelSpec(KernelKind.INK_SPLINE_LINEAR, d=2)
    K = cross_gram(spec, rng.random((5, 2)), rng.random((3, 2)))
    assert K.shape == (5, 3)
    with pytest.raises(Exception):
        cross_gram(spec, rng.random((5, 3)), rng.random((3, 2)))


def test_ink_gram_rejects_negative_coordinates():
    spec = KernelSpec(KernelKind.INK_SPLINE_LINEAR, d=1)
    with pytest.raises(ValueError):
        cross_gram(spec, np.array([[-0.2]]), np.array([[0.5]]))
