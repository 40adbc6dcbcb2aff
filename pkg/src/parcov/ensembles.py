"""Parametric Gaussian ensembles: sampling, diagonalization and unfolding.

Normalization: every off-diagonal matrix element has ``beta`` real components,
each of variance ``v2 = 1/(beta*N)``, so the spectrum fills a semicircle of
radius 2.  Diagonal elements are real with variance ``2*v2``, which is what the
invariant density ``P(H) ~ exp(-tr H^2 / 4 v2)`` implies for every class.

For beta=4 a quaternion-real N x N matrix is stored as the 2N x 2N complex
self-dual matrix ``[[A, B], [-conj(B), conj(A)]]`` with ``A`` Hermitian and
``B`` complex antisymmetric.  Each level then appears twice (Kramers pairs).
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import ConfigurationError, check_beta

logger = logging.getLogger(__name__)

SEMICIRCLE_RADIUS = 2.0
DELTA_EDGE = 0.05
BAND_CENTER_DENSITY = 1.0 / np.pi

ROLE_H0 = 0
ROLE_V = 1


class EigensolverError(RuntimeError):
    def __init__(self, message, member=None):
        super().__init__(message if member is None else f"member {member}: {message}")
        self.member = member


@dataclass(frozen=True)
class GaussianEnsembleConfig:
    beta: int
    dim: int
    members: int
    alpha_values: tuple
    seed: int = 0
    middle_fraction: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "beta", check_beta(self.beta))
        object.__setattr__(self, "alpha_values", tuple(float(a) for a in self.alpha_values))
        if self.dim < 4:
            raise ConfigurationError("ge.dim must be >= 4")
        if self.members < 1:
            raise ConfigurationError("ge.members must be >= 1")
        if not self.alpha_values or self.alpha_values[0] != 0.0:
            raise ConfigurationError("ge.alpha_values must start with 0")
        if any(a < 0 for a in self.alpha_values):
            raise ConfigurationError("ge.alpha_values must be >= 0")
        if not 0.0 < self.middle_fraction <= 1.0:
            raise ConfigurationError("ge.middle_fraction must lie in (0, 1]")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")

    @classmethod
    def from_lambdas(cls, beta, dim, members, lambdas, seed=0, middle_fraction=0.25):
        """Config whose alpha grid hits the requested Lambda values at the band center."""
        alphas = [alpha_from_lambda(lam, beta, dim) for lam in lambdas]
        return cls(beta, dim, members, tuple(alphas), seed, middle_fraction)

    @property
    def lambdas(self):
        return tuple(lambda_from_alpha(a, self.beta, self.dim) for a in self.alpha_values)


@dataclass
class HermitianSample:
    beta: int
    dim: int
    entries: np.ndarray

    def __post_init__(self):
        size = 2 * self.dim if self.beta == 4 else self.dim
        if self.entries.shape != (size, size):
            raise ConfigurationError(
                f"beta={self.beta}, dim={self.dim} needs a {size}x{size} matrix, got {self.entries.shape}"
            )


@dataclass
class SpectrumFamily:
    """Sorted eigenvalues, shape ``(members, len(alpha_values), dim)``."""

    beta: int
    dim: int
    alpha_values: tuple
    levels: np.ndarray
    seed: int = 0
    semicircle_radius: float = field(default=SEMICIRCLE_RADIUS, init=False)

    @property
    def members(self):
        return self.levels.shape[0]


@dataclass
class UnfoldedBand:
    """Unfolded levels restricted to the central band ``[lo, hi)``.

    ``levels[m][j]`` is the sorted array of member ``m`` at parameter index ``j``;
    lengths differ slightly between arrays, so they are kept as lists.
    """

    beta: int
    dim: int
    lo: float
    hi: float
    levels: list
    lambdas: tuple = ()
    periodic: bool = False

    @property
    def members(self):
        return len(self.levels)

    @property
    def band_length(self):
        counts = [len(arr) for member in self.levels for arr in member]
        return float(np.mean(counts))

    def mean_spacing(self):
        spacings = [np.diff(arr) for member in self.levels for arr in member if len(arr) > 1]
        return float(np.mean(np.concatenate(spacings)))


def member_rng(seed, member, role):
    """Independent counter-based stream for one (member, role) pair."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(member), int(role)))
    return np.random.Generator(np.random.Philox(ss))


def sample_ge(beta, dim, rng):
    """Draw one matrix of the Gaussian ensemble with Dyson index ``beta``."""
    beta = check_beta(beta)
    if dim < 2:
        raise ConfigurationError("dim must be >= 2")
    sd = np.sqrt(1.0 / (beta * dim))  # per real component, off-diagonal

    def real_sym(n):
        a = rng.standard_normal((n, n)) * sd
        a = np.triu(a, 1)
        a = a + a.T
        a[np.diag_indices(n)] = rng.standard_normal(n) * np.sqrt(2.0) * sd
        return a

    if beta == 1:
        return HermitianSample(1, dim, real_sym(dim))

    re = real_sym(dim)
    im = np.triu(rng.standard_normal((dim, dim)) * sd, 1)
    a = re + 1j * (im - im.T)
    if beta == 2:
        return HermitianSample(2, dim, a)

    b = np.triu(rng.standard_normal((dim, dim)) * sd + 1j * rng.standard_normal((dim, dim)) * sd, 1)
    b = b - b.T
    h = np.block([[a, b], [-b.conj(), a.conj()]])
    return HermitianSample(4, dim, h)


def make_parametric(h0, v, alpha):
    """``(H0 + alpha V) / sqrt(1 + alpha^2)``, same law as ``H0``."""
    if h0.beta != v.beta or h0.dim != v.dim:
        raise ConfigurationError("H0 and V must share beta and dim")
    if alpha == 0:
        return HermitianSample(h0.beta, h0.dim, h0.entries.copy())
    h = (h0.entries + alpha * v.entries) / np.sqrt(1.0 + alpha * alpha)
    return HermitianSample(h0.beta, h0.dim, h)


def eigenvalues(h, member=None):
    """Ascending eigenvalues; Kramers pairs are collapsed for beta=4."""
    try:
        w = np.linalg.eigvalsh(h.entries)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(str(exc), member) from exc
    if h.beta == 4:
        w = w[::2]
    return w


def semicircle_density(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < SEMICIRCLE_RADIUS
    out = np.zeros_like(x)
    out[inside] = np.sqrt(4.0 - x[inside] ** 2) / (2 * np.pi)
    return out if out.ndim else float(out)


def semicircle_cumulative(x):
    """Fraction of levels below ``x``: 1/2 + x sqrt(4-x^2)/4pi + arcsin(x/2)/pi."""
    x = np.clip(np.asarray(x, dtype=float), -SEMICIRCLE_RADIUS, SEMICIRCLE_RADIUS)
    out = 0.5 + x * np.sqrt(4.0 - x * x) / (4 * np.pi) + np.arcsin(x / 2) / np.pi
    return out if out.ndim else float(out)


def unfold_semicircle(levels, dim):
    """Map levels to the mean counting function ``N * F(x)``; unit mean spacing."""
    levels = np.asarray(levels, dtype=float)
    limit = SEMICIRCLE_RADIUS + DELTA_EDGE
    if levels.size and (levels.min() < -limit or levels.max() > limit):
        logger.warning("levels leak past the semicircle edge by more than %.2f", DELTA_EDGE)
    return dim * semicircle_cumulative(levels)


def band_edges(dim, middle_fraction):
    if not 0.0 < middle_fraction <= 1.0:
        raise ConfigurationError("middle_fraction must lie in (0, 1]")
    width = np.floor(middle_fraction * dim)
    if width < 2:
        raise ConfigurationError("middle band holds fewer than 2 levels")
    lo = (dim - width) / 2.0
    return lo, lo + width


def select_middle_band(unfolded, middle_fraction, dim=None):
    """Keep the unfolded levels in the central interval of length floor(fraction*N)."""
    unfolded = np.asarray(unfolded)
    dim = len(unfolded) if dim is None else dim
    lo, hi = band_edges(dim, middle_fraction)
    # half-open, matching the window convention
    i0, i1 = np.searchsorted(unfolded, [lo, hi], side="left")
    return unfolded[i0:i1]


def lambda_from_alpha(alpha, beta, dim, rho_bar=BAND_CENTER_DENSITY):
    if rho_bar <= 0:
        raise ConfigurationError("rho_bar must be positive")
    return alpha * alpha * dim * rho_bar * rho_bar / beta


def alpha_from_lambda(lam, beta, dim, rho_bar=BAND_CENTER_DENSITY):
    if lam < 0:
        raise ConfigurationError("Lambda must be >= 0")
    return float(np.sqrt(lam * beta / dim) / rho_bar)


def lambda_drift(alpha, beta, dim, middle_fraction):
    """Relative spread of Lambda across the middle band (density taken at its edges)."""
    lo, hi = band_edges(dim, middle_fraction)
    # invert the unfolding at the band edge
    from scipy.optimize import brentq

    x_edge = brentq(lambda x: dim * semicircle_cumulative(x) - hi, 0.0, SEMICIRCLE_RADIUS)
    center = lambda_from_alpha(alpha, beta, dim)
    edge = lambda_from_alpha(alpha, beta, dim, semicircle_density(x_edge))
    return 0.0 if center == 0 else (center - edge) / center


def _member_spectra(cfg, member):
    h0 = sample_ge(cfg.beta, cfg.dim, member_rng(cfg.seed, member, ROLE_H0))
    v = sample_ge(cfg.beta, cfg.dim, member_rng(cfg.seed, member, ROLE_V))
    out = np.empty((len(cfg.alpha_values), cfg.dim))
    for j, alpha in enumerate(cfg.alpha_values):
        out[j] = eigenvalues(make_parametric(h0, v, alpha), member)
    return out


def generate_family(cfg, jobs=1):
    """Sample and diagonalize every member at every alpha."""
    if jobs and jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            blocks = list(pool.map(_member_spectra, [cfg] * cfg.members, range(cfg.members)))
    else:
        blocks = [_member_spectra(cfg, m) for m in range(cfg.members)]
    return SpectrumFamily(cfg.beta, cfg.dim, cfg.alpha_values, np.stack(blocks), cfg.seed)


def unfold_family(family, middle_fraction=0.25):
    lo, hi = band_edges(family.dim, middle_fraction)
    lambdas = tuple(lambda_from_alpha(a, family.beta, family.dim) for a in family.alpha_values)
    levels = [
        [select_middle_band(unfold_semicircle(arr, family.dim), middle_fraction, family.dim) for arr in member]
        for member in family.levels
    ]
    drift = lambda_drift(max(family.alpha_values), family.beta, family.dim, middle_fraction)
    logger.info("Lambda drift across the middle band: %.2f%%", 100 * drift)
    return UnfoldedBand(family.beta, family.dim, lo, hi, levels, lambdas)
