import csv
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from parcov import ConfigurationError
from parcov.counting import (
    CSV_COLUMNS,
    WindowScheme,
    bootstrap_error,
    count_in_window,
    estimate_counting,
    estimate_pnv,
    estimate_sigma11,
    window_counts,
    write_csv,
)
from parcov.ensembles import UnfoldedBand


def _band(levels, lo, hi, periodic=False, lambdas=()):
    return UnfoldedBand(2, int(hi - lo), lo, hi, levels, lambdas, periodic)


def test_count_half_open():
    levels = np.array([0.0, 1.0, 1.5, 2.0])
    assert count_in_window(levels, 0.0, 2.0) == 3
    assert count_in_window(levels, 1.0, 0.5) == 1
    assert count_in_window(levels, 1.0, 0.0) == 0


@given(st.lists(st.floats(0, 50, allow_nan=False), min_size=1, max_size=80),
       st.floats(0.1, 20), st.floats(0, 40))
def test_window_counts_match_brute_force(values, r, start):
    levels = np.sort(np.array(values))
    brute = int(np.sum((levels >= start) & (levels < start + r)))
    assert window_counts(levels, np.array([start]), r)[0] == brute
    assert count_in_window(levels, start, r) == brute


def test_periodic_windows_wrap():
    levels = np.array([0.5, 9.5])
    assert window_counts(levels, np.array([9.0]), 2.0, period=10.0)[0] == 2
    assert window_counts(levels, np.array([9.0]), 2.0)[0] == 1


def test_window_starts():
    s = WindowScheme((3.0,), stride=1.0)
    assert np.array_equal(s.starts(0.0, 10.0, 3.0), np.arange(8.0))
    assert np.array_equal(s.starts(0.0, 10.0, 3.0, periodic=True), np.arange(10.0))
    assert np.array_equal(WindowScheme((3.0,), placement="disjoint").starts(0.0, 10.0, 3.0), [0.0, 3.0, 6.0])
    assert s.starts(0.0, 2.0, 3.0).size == 0
    with pytest.raises(ConfigurationError):
        WindowScheme((0.0,))
    with pytest.raises(ConfigurationError):
        WindowScheme(placement="random")


@given(st.integers(0, 2**32 - 1))
def test_pnv_identity_on_any_sample(seed):
    rng = np.random.default_rng(seed)
    levels = [[np.sort(rng.uniform(0, 60, rng.integers(40, 80))) for _ in range(3)] for _ in range(8)]
    res = estimate_counting(_band(levels, 0.0, 60.0), WindowScheme((1.0, 4.5, 10.0)), resamples=100)
    assert res.identity_residual() <= 1e-12
    # reference pairing with itself: sigma11 = sigma2 and pnv = 0
    assert np.allclose(res.sigma11[:, 0], res.sigma2[:, 0])
    assert np.allclose(res.pnv[:, 0], 0.0, atol=1e-12)


def test_poisson_oracle():
    """Independent uniform levels: Sigma2(r) = r, cross covariance 0, PNV = 2r."""
    rng = np.random.default_rng(5)
    length = 400.0
    levels = [[np.sort(rng.uniform(0, length, rng.poisson(length))) for _ in range(2)] for _ in range(60)]
    res = estimate_counting(_band(levels, 0.0, length, periodic=True, lambdas=(0.0, 1.0)),
                            WindowScheme((1.0, 5.0)), resamples=300)
    for i, r in enumerate((1.0, 5.0)):
        assert abs(res.sigma2[i, 0] - r) < 4 * res.sigma2_err[i, 0] + 0.02 * r
        assert abs(res.sigma11[i, 1]) < 4 * res.sigma11_err[i, 1]
        assert abs(res.pnv[i, 1] - 2 * r) < 4 * res.pnv_err[i, 1] + 0.04 * r


def test_bootstrap_matches_clt():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(400)
    err = bootstrap_error(x, resamples=2000, rng=np.random.default_rng(2))
    assert err == pytest.approx(x.std(ddof=1) / np.sqrt(x.size), rel=0.1)


def test_bootstrap_errors():
    with pytest.raises(ValueError):
        bootstrap_error([])
    with pytest.raises(ConfigurationError):
        bootstrap_error([1.0, 2.0], resamples=10)
    assert bootstrap_error([3.0] * 10) == 0.0


def test_member_bootstrap_error_shrinks_with_members():
    rng = np.random.default_rng(3)

    def err(members):
        levels = [[np.sort(rng.uniform(0, 100, 100)) for _ in range(2)] for _ in range(members)]
        return estimate_counting(_band(levels, 0.0, 100.0), WindowScheme((5.0,)), 400).sigma2_err[0, 0]

    assert err(64) < err(16)


def test_few_members_flagged():
    levels = [[np.arange(0.0, 20.0), np.arange(0.0, 20.0) + 0.5] for _ in range(3)]
    with pytest.warns(UserWarning):
        res = estimate_counting(_band(levels, 0.0, 20.0), WindowScheme((1.0,)))
    assert res.flag == "few-members"
    assert np.isnan(res.sigma11_err).all()


def test_window_too_large():
    levels = [[np.arange(0.0, 5.0)] for _ in range(8)]
    with pytest.raises(ConfigurationError):
        estimate_counting(_band(levels, 0.0, 5.0), WindowScheme((10.0,)))


def test_tables_and_csv(tmp_path):
    rng = np.random.default_rng(0)
    levels = [[np.sort(rng.uniform(0, 30, 30)) for _ in range(2)] for _ in range(10)]
    band = _band(levels, 0.0, 30.0, lambdas=(0.0, 0.1))
    scheme = WindowScheme((1.0, 5.0))
    s11 = estimate_sigma11(band, scheme, resamples=100)
    pnv = estimate_pnv(band, scheme, resamples=100)
    assert len(s11.rows) == 4 and len(pnv.rows) == 4
    assert s11.lookup(5.0, 0.1).statistic == "sigma11"
    with pytest.raises(KeyError):
        s11.lookup(2.0, 0.1)
    path = write_csv(tmp_path / "t.csv", [pnv, s11], provenance="ge")
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS + ("provenance",)
    keys = [(float(r[1]), float(r[2])) for r in rows[1:]]
    assert keys == sorted(keys)


@pytest.fixture(scope="module")
def ge_band():
    from parcov.ensembles import GaussianEnsembleConfig, generate_family, unfold_family

    cfg = GaussianEnsembleConfig.from_lambdas(2, 256, 60, (0.0, 0.1, 5.0), seed=11)
    return unfold_family(generate_family(cfg))


def test_window_placement_within_errors(ge_band):
    sliding = estimate_counting(ge_band, WindowScheme((1.0, 5.0)), resamples=300)
    disjoint = estimate_counting(ge_band, WindowScheme((1.0, 5.0), placement="disjoint"), resamples=300)
    for name in ("sigma11", "sigma2", "pnv"):
        a, b = getattr(sliding, name), getattr(disjoint, name)
        err = np.hypot(getattr(sliding, name + "_err"), getattr(disjoint, name + "_err"))
        assert np.all(np.abs(a - b) <= 3 * err + 1e-12)


def test_decorrelated_pnv_is_twice_sigma2(ge_band):
    """Lambda >> 1: the two spectra are independent, so V -> 2 Sigma2 and Sigma11 -> 0."""
    res = estimate_counting(ge_band, WindowScheme((1.0, 5.0)), resamples=300)
    assert np.all(np.abs(res.pnv[:, 2] - 2 * res.sigma2[:, 0]) <= 4 * res.pnv_err[:, 2] + 0.02)
    assert np.all(np.abs(res.sigma11[:, 2]) <= 4 * res.sigma11_err[:, 2])
