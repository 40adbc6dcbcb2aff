import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import sici

from parcov import QuadratureError, exact, pipeline
from parcov.acceptance import COMPACT_R
from parcov.exact import (
    KernelHandle,
    QuadratureSettings,
    k1_exact,
    k2_exact,
    k4_exact,
    kernel,
    r11_exact,
    r11_fourier,
    sigma11_from_k,
    sigma11_from_y,
)
from parcov.theory import k_zero_exact

R = np.array([0.5, 1.0, 2.5, 5.0, 10.0, 20.0])


# closed-form number variances of the three Gaussian ensembles


def _nv_unitary(r):
    x = 2 * np.pi * r
    si, ci = sici(x)
    return (np.log(x) + np.euler_gamma + 1 - np.cos(x) - ci) / np.pi**2 + r * (1 - 2 * si / np.pi)


def _nv_orthogonal(r):
    si, _ = sici(np.pi * r)
    return 2 * _nv_unitary(r) + (si / np.pi) ** 2 - si / np.pi


def _nv_symplectic(r):
    si, _ = sici(2 * np.pi * r)
    return 0.5 * _nv_unitary(2 * r) + (si / np.pi) ** 2 / 4


@pytest.mark.parametrize("beta,oracle", [(1, _nv_orthogonal), (2, _nv_unitary), (4, _nv_symplectic)])
def test_number_variance_matches_closed_forms(beta, oracle):
    assert np.allclose(exact.exact_sigma2(R, beta), oracle(R), rtol=0, atol=1e-9)


def test_gue_number_variance_regression():
    assert exact.exact_sigma2(1.0, 2) == pytest.approx(0.344162586, abs=1e-8)


def test_settings_validation():
    with pytest.raises(ValueError):
        QuadratureSettings(delta_reg=0.0)


# beta = 2 closed form


@pytest.mark.parametrize("lam", [1e-9, 1e-4, 0.05, 0.1, 2.0])
def test_k2_continuity_at_one(lam):
    a = 4 * np.pi**2 * lam
    target = np.exp(-a) * np.sinh(a) / a
    for k in (np.nextafter(1.0, 0.0), 1.0, np.nextafter(1.0, 2.0)):
        assert abs(k2_exact(k, lam) - target) <= 1e-14


def test_k2_limits():
    assert k2_exact(0.5, 1e-10) == pytest.approx(0.5, abs=1e-8)
    assert k2_exact(2.0, 1e-10) == pytest.approx(1.0, abs=1e-7)
    assert k2_exact(0.5, 0.0) == 0.5
    assert k2_exact(0.0, 0.3) == 0.0


def test_k2_small_k_matches_cutoff_form():
    lam = 0.05
    k = np.linspace(0.001, 0.05, 20)
    small = k * np.exp(-4 * np.pi**2 * lam * k)
    assert np.max(np.abs(k2_exact(k, lam) / small - 1)) < 0.02


@given(st.floats(-4, 4, allow_nan=False), st.floats(0, 1))
def test_k2_even_and_bounded(k, lam):
    assert k2_exact(k, lam) == k2_exact(-k, lam)
    assert k2_exact(k, lam) <= k_zero_exact(k, 2) + 1e-12


# beta = 1 and 4 double integrals


def test_double_integrals_vanish_at_origin():
    assert k1_exact(0.0, 0.1) == 0.0
    assert k4_exact(0.0, 0.1) == 0.0


@pytest.mark.parametrize("fn", [k1_exact, k4_exact])
@pytest.mark.parametrize("k", [0.3, 1.7])
def test_double_integrals_even(fn, k):
    assert fn(k, 0.05) == fn(-k, 0.05)


@pytest.mark.parametrize("beta,fn", [(1, k1_exact), (4, k4_exact)])
def test_zero_lambda_limit(beta, fn):
    ks = np.array([0.01, 0.03, 0.1, 0.45, 0.9, 1.3, 2.5])
    vals = np.array([fn(k, 1e-7) for k in ks])
    assert np.max(np.abs(vals / k_zero_exact(ks, beta) - 1)) < 1e-3


@pytest.mark.parametrize("beta,fn", [(1, k1_exact), (4, k4_exact)])
def test_small_k_slope(beta, fn):
    k = 0.01
    assert fn(k, 1e-6) / k == pytest.approx(2 / beta, rel=0.03)


@pytest.mark.parametrize("fn", [k1_exact, k4_exact])
@pytest.mark.parametrize("k", [0.05, 0.5, 1.5])
def test_monotone_decay_in_lambda(fn, k):
    vals = [fn(k, lam) for lam in (0.0, 0.025, 0.05)]
    assert vals[0] > vals[1] > vals[2] > 0


def test_k4_log_singularity():
    lam = 0.05
    a, b = k4_exact(1 - 1e-4, lam), k4_exact(1 - 1e-7, lam)
    assert b - a == pytest.approx(0.25 * np.log(1e3), rel=1e-3)
    assert np.isinf(k4_exact(1.0, lam))
    # inside the extrapolation window the same law holds
    gap_a, gap_b = 1 - (1 - 1e-6), 1 - (1 - 1e-9)
    assert k4_exact(1 - 1e-9, lam) - k4_exact(1 - 1e-6, lam) == pytest.approx(0.25 * np.log(gap_a / gap_b), rel=1e-8)


def test_quadrature_failure_reported():
    strict = QuadratureSettings(rel_tol=1e-15, abs_tol=1e-300, max_subdivisions=5)
    with pytest.raises(QuadratureError) as info:
        k1_exact(0.7, 0.05, strict)
    assert info.value.achieved is not None


def test_kernel_handle_methods():
    assert KernelHandle(1, 0.0).method == "zero-lambda"
    assert KernelHandle(2, 0.1).method == "closed-form"
    assert KernelHandle(4, 0.1).method == "double-integral"
    h = kernel(1, 0.05)
    assert h is kernel(1, 0.05)
    v = h(np.array([0.2, 0.2]))
    assert v[0] == v[1] == k1_exact(0.2, 0.05)
    assert KernelHandle(1, 0.0).tail == 1.0 and h.tail == 0.0


# k-space -> number covariance


def test_sigma11_trivial_values():
    assert sigma11_from_k(0.0, 0.1, kernel(2, 0.1)) == 0.0
    assert sigma11_from_y(3.0, 0.1, lambda s: 0.0) == 0.0
    assert sigma11_from_y(0.0, 0.1, lambda s: 1.0) == 0.0


def test_sigma11_routes_agree_beta2():
    r, lam = 2.0, 0.1
    y = lambda s: 1.0 - r11_exact(s, lam, 2)
    assert sigma11_from_y(r, lam, y) == pytest.approx(sigma11_from_k(r, lam, kernel(2, lam)), abs=1e-3)


def test_r11_beta2_routes_agree():
    kern = kernel(2, 0.1)
    for r in (0.5, 2.0, 4.0):
        assert r11_exact(r, 0.1, 2) == pytest.approx(r11_fourier(r, kern), abs=1e-3)


def test_r11_decorrelates_at_large_lambda():
    assert r11_exact(1.3, 5.0, 2) == pytest.approx(1.0, abs=1e-3)


@pytest.mark.slow
def test_r11_beta1_routes_agree():
    assert r11_exact(1.0, 0.05, 1) == pytest.approx(r11_fourier(1.0, kernel(1, 0.05)), abs=1e-2)


@pytest.mark.slow
def test_r11_beta4_routes_agree():
    assert r11_exact(1.0, 0.05, 4) == pytest.approx(r11_fourier(1.0, kernel(4, 0.05)), abs=1e-2)


def test_r11_requires_positive_lambda_for_triple_integrals():
    with pytest.raises(ValueError):
        r11_exact(1.0, 0.0, 1)
    with pytest.raises(ValueError):
        r11_fourier(1.0, kernel(1, 0.0))


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_sigma11_monotone_in_lambda(beta, cache_dir):
    # same r grid as the compact-formula acceptance check, so the curves come from the shared cache
    curves = [pipeline.exact_sigma11(beta, lam, COMPACT_R, cache_dir=cache_dir)[0] for lam in (0.0, 0.05, 0.1, 0.2)]
    for a, b in zip(curves[:-1], curves[1:]):
        assert np.all(b <= a)
    assert np.all(curves[-1] > 0)


@pytest.mark.parametrize("beta", [pytest.param(1, marks=pytest.mark.slow), 2])
def test_decorrelation_regime(beta):
    r, lam = 1.0, 2.0  # beta pi^2 Lambda >> pi r
    ratio = exact.exact_sigma11(r, beta, lam) / exact.exact_sigma2(r, beta)
    assert 0 <= ratio < 0.05


@pytest.mark.slow
def test_halving_panels_changes_little():
    coarse = sigma11_from_k(np.array([1.0, 5.0]), 0.2, kernel(1, 0.2))
    fine_q = QuadratureSettings(panel_width=0.1)
    fine = sigma11_from_k(np.array([1.0, 5.0]), 0.2, kernel(1, 0.2, fine_q), fine_q)


def test_halving_panels_changes_little_closed_form():
    coarse = sigma11_from_k(np.array([1.0, 5.0, 20.0]), 0.05, kernel(2, 0.05))
    fine_q = QuadratureSettings(panel_width=0.05)
    fine = sigma11_from_k(np.array([1.0, 5.0, 20.0]), 0.05, kernel(2, 0.05, fine_q), fine_q)
    assert np.allclose(coarse, fine, rtol=1e-8)
    assert np.allclose(coarse, fine, rtol=1e-6)
