import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from delaycert.errors import CertificationError, ConfigurationError, DimensionError
from delaycert.matrix_ops import (QuadratureGrid, expm, expm_stack, matrix_norm,
                                  solve_lyapunov, spectral_abscissa, sym_eig_extremes,
                                  trapezoid_integrate, trapezoid_pairs)

small = st.floats(-3, 3, allow_nan=False, allow_subnormal=False)


def square(max_n=5):
    return st.integers(1, max_n).flatmap(lambda n: arrays(float, (n, n), elements=small))


def test_expm_scalar_and_nilpotent():
    assert expm(np.array([[1.0]]))[0, 0] == pytest.approx(np.e, rel=1e-15)
    assert np.allclose(expm(np.array([[0.0, 1.0], [0.0, 0.0]])), [[1.0, 1.0], [0.0, 1.0]])
    assert np.allclose(expm(np.zeros((3, 3))), np.eye(3), rtol=0, atol=1e-15)


def test_expm_large_norm_matches_scipy():
    rng = np.random.default_rng(3)
    m = 8 * rng.normal(size=(4, 4))
    ref = sla.expm(m)
    assert np.linalg.norm(expm(m) - ref) <= 1e-11 * np.linalg.norm(ref)


@given(square())
def test_expm_matches_scipy(m):
    ref = sla.expm(m)
    assert np.allclose(expm(m), ref, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(ref).max()))


@given(square(4))
def test_expm_inverse_property(m):
    prod = expm(m) @ expm(-m)
    assert np.allclose(prod, np.eye(m.shape[0]), atol=1e-9 * np.linalg.cond(expm(m)))


def test_expm_stack_is_elementwise():
    rng = np.random.default_rng(0)
    ms = rng.normal(size=(6, 3, 3)) * np.array([0.01, 0.1, 1, 3, 6, 10])[:, None, None]
    out = expm_stack(ms)
    for m, e in zip(ms, out):
        assert np.allclose(e, sla.expm(m), rtol=1e-12, atol=1e-12)


def test_expm_rejects_non_square():
    with pytest.raises(DimensionError):
        expm(np.ones((2, 3)))


@given(square())
def test_spectral_norm_below_frobenius(m):
    assert matrix_norm(m, "spectral") <= matrix_norm(m, "frobenius") * (1 + 1e-12)


def test_norm_kind_validation():
    with pytest.raises(ValueError):
        matrix_norm(np.eye(2), "nuclear")


def test_sym_eig_extremes():
    lo, hi = sym_eig_extremes(np.diag([3.0, -1.0, 2.0]))
    assert (lo, hi) == (-1.0, 3.0)


def test_spectral_abscissa():
    assert spectral_abscissa(np.array([[0.0, 1.0], [-2.0, -3.0]])) == pytest.approx(-1.0)


def test_lyapunov_scalar():
    v = solve_lyapunov(np.array([[-1.0]]), np.array([[3.0]]))
    assert v[0, 0] == pytest.approx(1.5)


def test_lyapunov_rejects_unstable():
    with pytest.raises(CertificationError):
        solve_lyapunov(np.array([[0.1]]), np.array([[1.0]]))


@settings(max_examples=40)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_lyapunov_matches_scipy(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    a -= (spectral_abscissa(a) + rng.uniform(0.1, 2)) * np.eye(n)
    g = rng.normal(size=(n, n))
    w = g @ g.T + np.eye(n)
    v = solve_lyapunov(a, w)
    ref = sla.solve_continuous_lyapunov(a.T, -w)
    assert np.allclose(v, ref, rtol=1e-8, atol=1e-10)
    assert np.linalg.norm(a.T @ v + v @ a + w) <= 1e-8 * np.linalg.norm(w)
    assert sym_eig_extremes(v)[0] > 0


def test_grid_contains_splits_and_ends():
    g = QuadratureGrid.build(1.0, 11, [-0.35, -0.5])
    assert g.points[0] == -1.0 and g.points[-1] == 0.0
    assert -0.35 in g.points and -0.5 in g.points
    assert np.all(np.diff(g.points) > 0)
    assert g.weights.sum() == pytest.approx(1.0)


def test_grid_rejects_bad_split():
    with pytest.raises(ConfigurationError):
        QuadratureGrid.build(1.0, 11, [-2.0])
    with pytest.raises(ConfigurationError):
        QuadratureGrid.build(0.0)


def test_trapezoid_is_second_order():
    errs = []
    for n in (101, 201, 401):
        g = QuadratureGrid.build(2.0, n)
        errs.append(abs(trapezoid_integrate(g, np.exp(g.points)) - (1 - np.exp(-2.0))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.95)


def test_trapezoid_pairs_integrates_step_exactly():
    pts = np.array([-1.0, -0.5, 0.0])
    right = np.array([1.0, 2.0, 2.0])
    left = np.array([1.0, 1.0, 2.0])
    assert trapezoid_pairs(pts, right, left) == pytest.approx(1.5)


def test_trapezoid_length_mismatch():
    g = QuadratureGrid.build(1.0, 5)
    with pytest.raises(DimensionError):
        trapezoid_integrate(g, np.ones(4))
