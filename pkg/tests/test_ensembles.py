import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from parcov import ConfigurationError
from parcov.ensembles import (
    GaussianEnsembleConfig,
    HermitianSample,
    alpha_from_lambda,
    band_edges,
    eigenvalues,
    generate_family,
    lambda_from_alpha,
    make_parametric,
    member_rng,
    sample_ge,
    select_middle_band,
    semicircle_cumulative,
    semicircle_density,
    unfold_family,
    unfold_semicircle,
)


def _components(h):
    n = h.dim
    a = h.entries[:n, :n]
    iu = np.triu_indices(n, 1)
    return np.real(np.diag(a)), a[iu]


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_entry_variances(beta):
    dim, diag, off = 60, [], []
    for m in range(40):
        d, o = _components(sample_ge(beta, dim, member_rng(7, m, 0)))
        diag.append(d)
        off.append(o)
    diag, off = np.concatenate(diag), np.concatenate(off)
    # each real component of an off-diagonal entry has variance 1/(beta N); the diagonal 2/(beta N)
    assert np.var(off.real) * beta * dim == pytest.approx(1.0, rel=0.05)
    if beta > 1:
        assert np.var(off.imag) * beta * dim == pytest.approx(1.0, rel=0.05)
    assert np.var(diag) * beta * dim == pytest.approx(2.0, rel=0.1)


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_hermitian(beta):
    h = sample_ge(beta, 12, member_rng(0, 0, 0)).entries
    assert np.allclose(h, h.conj().T, atol=0)


def test_quaternion_self_dual_structure():
    n = 10
    h = sample_ge(4, n, member_rng(1, 0, 0)).entries
    a, b = h[:n, :n], h[:n, n:]
    assert np.allclose(h[n:, n:], a.conj())
    assert np.allclose(h[n:, :n], -b.conj())
    assert np.allclose(b, -b.T)


def test_kramers_pairs_collapsed():
    h = make_parametric(sample_ge(4, 40, member_rng(2, 0, 0)), sample_ge(4, 40, member_rng(2, 0, 1)), 0.2)
    w = np.linalg.eigvalsh(h.entries)
    assert np.max(np.abs(w[0::2] - w[1::2])) <= 1e-10 * np.max(np.abs(w))
    assert np.array_equal(eigenvalues(h), w[::2])


def test_sample_shape_check():
    with pytest.raises(ConfigurationError):
        HermitianSample(4, 5, np.zeros((5, 5)))


def test_rng_streams_are_deterministic_and_distinct():
    a = member_rng(3, 4, 0).standard_normal(5)
    assert np.array_equal(a, member_rng(3, 4, 0).standard_normal(5))
    assert not np.allclose(a, member_rng(3, 4, 1).standard_normal(5))
    assert not np.allclose(a, member_rng(3, 5, 0).standard_normal(5))


def test_parametric_combination_preserves_law():
    h0 = sample_ge(2, 4, member_rng(0, 0, 0))
    v = sample_ge(2, 4, member_rng(0, 0, 1))
    assert np.array_equal(make_parametric(h0, v, 0.0).entries, h0.entries)
    h = make_parametric(h0, v, 1.0).entries
    assert np.allclose(h, (h0.entries + v.entries) / np.sqrt(2))
    with pytest.raises(ConfigurationError):
        make_parametric(h0, sample_ge(1, 4, member_rng(0, 0, 1)), 0.1)


def test_semicircle_normalized_and_cumulative_matches_quadrature():
    total, _ = integrate.quad(semicircle_density, -2, 2)
    assert total == pytest.approx(1.0, abs=1e-10)
    for x in (-1.7, -0.3, 0.0, 0.9, 1.99):
        ref, _ = integrate.quad(semicircle_density, -2, x)
        assert semicircle_cumulative(x) == pytest.approx(ref, abs=1e-10)
    assert semicircle_density(3.0) == 0.0
    assert semicircle_density(0.0) == pytest.approx(1 / np.pi)


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_cumulative_monotone(x, y):
    if x <= y:
        assert semicircle_cumulative(x) <= semicircle_cumulative(y) + 1e-15


@given(st.floats(0, 2), st.sampled_from([1, 2, 4]), st.integers(16, 4096))
def test_lambda_alpha_roundtrip(lam, beta, dim):
    assert lambda_from_alpha(alpha_from_lambda(lam, beta, dim), beta, dim) == pytest.approx(lam, abs=1e-12)


def test_lambda_definition():
    # beta^-1 alpha^2 N rho^2 with rho = 1/pi at the band center
    assert lambda_from_alpha(0.1, 2, 512) == pytest.approx(0.01 * 512 / np.pi**2 / 2)
    with pytest.raises(ConfigurationError):
        alpha_from_lambda(-0.1, 1, 10)


def test_middle_band_half_open():
    lo, hi = band_edges(100, 0.25)
    assert (lo, hi) == (37.5, 62.5)
    levels = np.array([37.0, 37.5, 50.0, 62.4, 62.5])
    assert np.array_equal(select_middle_band(levels, 0.25, dim=100), [37.5, 50.0, 62.4])
    with pytest.raises(ConfigurationError):
        band_edges(4, 0.1)


def test_unfolded_mean_spacing_is_one():
    cfg = GaussianEnsembleConfig.from_lambdas(1, 256, 10, (0.0, 0.1), seed=4)
    band = unfold_family(generate_family(cfg))
    assert band.mean_spacing() == pytest.approx(1.0, abs=0.02)
    assert band.band_length == pytest.approx(64, abs=3)


def test_unfolding_maps_edges():
    assert unfold_semicircle(np.array([-2.0, 0.0, 2.0]), 10) == pytest.approx([0, 5, 10])


def test_config_validation():
    with pytest.raises(ConfigurationError):
        GaussianEnsembleConfig(3, 10, 2, (0.0,))
    with pytest.raises(ConfigurationError):
        GaussianEnsembleConfig(1, 10, 2, (0.1,))
    with pytest.raises(ConfigurationError):
        GaussianEnsembleConfig(1, 10, 0, (0.0,))
    cfg = GaussianEnsembleConfig.from_lambdas(2, 64, 3, (0.0, 0.05))
    assert cfg.lambdas == pytest.approx((0.0, 0.05))


def test_generate_family_deterministic_and_scheduling_independent():
    cfg = GaussianEnsembleConfig.from_lambdas(2, 32, 4, (0.0, 0.1), seed=9)
    a = generate_family(cfg, jobs=1).levels
    b = generate_family(cfg, jobs=2).levels
    assert a.shape == (4, 2, 32)
    assert np.array_equal(a, b)
