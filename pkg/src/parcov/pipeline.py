"""Cached data products shared by the CLI and the acceptance suite."""

from __future__ import annotations

import logging

import numpy as np

from . import cache, exact, theory
from .counting import WindowScheme, estimate_counting
from .ensembles import GaussianEnsembleConfig, generate_family, unfold_family, SpectrumFamily
from .kicked_rotor import KickedRotorConfig, KickedRotorFamily, generate_ensemble, unfolded_band

logger = logging.getLogger(__name__)

# one schedule per symmetry class so Figs. 1-3 and the acceptance suite share spectra
KR_LAMBDAS = {
    1: (0.0, 0.025, 0.05, 0.075, 0.1, 0.15, 0.5, 1.0, 1.5),
    2: (0.0, 0.025, 0.05, 0.075, 0.1, 0.15, 0.2, 0.5, 1.0),
}
KR_GAMMA = {1: 0.0, 2: 0.1}
GE_LAMBDAS = (0.0, 0.05, 0.1, 0.15, 0.2)


def ge_config(section, seed):
    return GaussianEnsembleConfig.from_lambdas(section.beta, section.dim, section.members, section.lambdas,
                                               seed, section.middle_fraction)


def ge_family(cfg, cache_dir=None, jobs=1):
    levels = cache.cached(cache_dir, f"ge-b{cfg.beta}", cfg, lambda: generate_family(cfg, jobs).levels,
                          extra={"beta": cfg.beta, "N": cfg.dim, "members": cfg.members,
                                 "params": list(cfg.alpha_values), "seed": cfg.seed})
    return SpectrumFamily(cfg.beta, cfg.dim, cfg.alpha_values, levels, cfg.seed)


def ge_band(cfg, cache_dir=None, jobs=1):
    return unfold_family(ge_family(cfg, cache_dir, jobs), cfg.middle_fraction)


def kr_config(section, lambdas=None):
    return KickedRotorConfig.from_lambdas(
        section.lambdas if lambdas is None else lambdas, gamma=section.gamma, dim=section.dim,
        members=section.members, k_base=section.k_base, k_member_step=section.k_member_step,
        smoothing_halfwidth=section.smoothing_halfwidth, smoothing_order=section.smoothing_order,
        eig_method=section.eig_method,
    )


def kr_family(cfg, cache_dir=None, jobs=1):
    # eigenangles do not depend on the smoothing settings
    key = {"dim": cfg.dim, "k_base": cfg.k_base, "k_member_step": cfg.k_member_step, "members": cfg.members,
           "delta_k_values": cfg.delta_k_values, "theta0": cfg.theta0, "gamma": cfg.gamma}
    records = [[float(k), dk] for k in cfg.base_k_values for dk in cfg.delta_k_values]
    angles = cache.cached(cache_dir, f"kr-b{cfg.beta}", key, lambda: generate_ensemble(cfg, jobs).angles,
                          extra={"beta": cfg.beta, "N": cfg.dim, "members": cfg.members,
                                 "params": {"K_dK": records}, "seed": None})
    return KickedRotorFamily(cfg, angles, cfg.lambdas)


def kr_band(family):
    return unfolded_band(family)


def counting(band, r_values, resamples=1000, seed=0, stride=1.0, placement="sliding"):
    return estimate_counting(band, WindowScheme(tuple(r_values), stride, placement), resamples, seed)


def exact_sigma11(beta, lam, r_values, q=exact.DEFAULT_SETTINGS, cache_dir=None):
    """Exact number covariance on an r grid, ``(values, error_estimates)``; cached on disk."""
    r = np.asarray(r_values, dtype=float)
    key = {"beta": beta, "lam": float(lam), "r": list(r), "q": q}

    def build():
        vals, errs = exact.sigma11_from_k_with_error(r, lam, exact.kernel(beta, lam, q), q)
        return np.stack([np.atleast_1d(vals), np.atleast_1d(errs)])

    out = cache.cached(cache_dir, f"theory-b{beta}", key, build)
    return out[0], out[1]


def fitted_epsilon(beta, q=exact.DEFAULT_SETTINGS, cache_dir=None, r_grid=theory.FIT_GRID):
    sigma2 = lambda r: exact_sigma11(beta, 0.0, r, q, cache_dir)[0]
    return theory.fit_epsilon(beta, sigma2, r_grid)


def exact_pnv_infinity(beta, lam, q=exact.DEFAULT_SETTINGS):
    k0 = exact.kernel(beta, 0.0, q)
    kl = exact.kernel(beta, lam, q)
    return theory.pnv_from_k_integral(beta, lam, k0, kl)
