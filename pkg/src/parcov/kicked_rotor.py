"""Quantum kicked rotor on the torus: Floquet operators, eigenangles, traces.

``U = B G`` in the position representation with indices
``m, n = -N', ..., N'`` (``N = 2N' + 1``, hbar = 1):

    B_mn = exp[-i K cos(2 pi m / N + theta0)] delta_mn
    G_mn = (1/N) sum_l exp[-i (l^2/2 - gamma l - 2 pi (m - n) l / N)]

``gamma = 0`` gives orthogonal (beta=1) statistics, ``gamma > 0`` unitary
(beta=2).  ``theta0 != 0`` breaks parity.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import ConfigurationError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
UNITARITY_TOL = 1e-8
# "complex": smooth the member-averaged cross product over q, then take the modulus.
# "modulus": take the modulus, then smooth; biased upward by ~sqrt(pi/(4 M)) where K is small.
SMOOTHING_ORDERS = ("complex", "modulus")


@dataclass(frozen=True)
class KickedRotorConfig:
    dim: int = 1025
    k_base: float = 10000.0
    k_member_step: float = 10000.0
    members: int = 50
    delta_k_values: tuple = (0.0, 0.1, 0.2, 0.3)
    theta0: float | None = None
    gamma: float = 0.0
    hbar: float = 1.0
    smoothing_halfwidth: int = 5
    q_max: int | None = None
    eig_method: str = "cayley"
    smoothing_order: str = "complex"

    def __post_init__(self):
        if self.dim < 3 or self.dim % 2 == 0:
            raise ConfigurationError("kr.dim must be an odd integer >= 3")
        dks = tuple(float(d) for d in self.delta_k_values)
        if not dks or dks[0] != 0.0 or any(d < 0 for d in dks):
            raise ConfigurationError("kr.delta_k_values must be >= 0 and start with 0")
        object.__setattr__(self, "delta_k_values", dks)
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigurationError("kr.gamma must lie in [0, 1)")
        if self.hbar != 1.0:
            raise ConfigurationError("only hbar = 1 is supported")
        if self.members < 1:
            raise ConfigurationError("kr.members must be >= 1")
        if self.smoothing_halfwidth < 0:
            raise ConfigurationError("kr.smoothing_halfwidth must be >= 0")
        if self.eig_method not in ("cayley", "eig"):
            raise ConfigurationError("kr.eig_method must be 'cayley' or 'eig'")
        if self.smoothing_order not in SMOOTHING_ORDERS:
            raise ConfigurationError(f"kr.smoothing_order must be one of {SMOOTHING_ORDERS}")
        if self.theta0 is None:
            object.__setattr__(self, "theta0", np.pi / (2 * self.dim))
        if self.q_max is None:
            object.__setattr__(self, "q_max", 3 * self.dim)

    @property
    def beta(self):
        return 1 if self.gamma == 0.0 else 2

    @property
    def half(self):
        return (self.dim - 1) // 2

    @property
    def base_k_values(self):
        return self.k_base + self.k_member_step * np.arange(self.members)

    @property
    def lambdas(self):
        return tuple(lambda_kicked(self.dim, dk, self.beta) for dk in self.delta_k_values)

    @classmethod
    def from_lambdas(cls, lambdas, gamma=0.0, dim=1025, **kw):
        beta = 1 if gamma == 0.0 else 2
        dks = tuple(delta_k_from_lambda(dim, lam, beta) for lam in lambdas)
        return cls(dim=dim, delta_k_values=dks, gamma=gamma, **kw)


@dataclass
class FloquetOperator:
    dim: int
    matrix: np.ndarray


@dataclass
class EigenangleSpectrum:
    angles: np.ndarray

    @property
    def dim(self):
        return self.angles.size

    def unfolded(self):
        """Constant density: unit mean spacing on [0, N)."""
        return self.angles * self.dim / TWO_PI


@dataclass
class FormFactorCurve:
    beta: int
    lam: float
    k: np.ndarray
    values: np.ndarray
    raw: np.ndarray | None = None
    members: int = 0
    provenance: str = "data"
    flag: str = ""


@dataclass
class KickedRotorFamily:
    """Eigenangles, shape ``(members, len(delta_k_values), dim)``."""

    config: KickedRotorConfig
    angles: np.ndarray
    lambdas: tuple = field(default=())

    @property
    def beta(self):
        return self.config.beta


def _positions(dim):
    half = (dim - 1) // 2
    return np.arange(-half, half + 1)


def build_b(cfg, K):
    """Diagonal of B (B itself is diagonal)."""
    m = _positions(cfg.dim).astype(np.longdouble)
    # K up to ~5e5: form and reduce the phase in extended precision
    arg = np.cos(np.longdouble(TWO_PI) * m / cfg.dim + np.longdouble(cfg.theta0)) * np.longdouble(K) / np.longdouble(cfg.hbar)
    phase = np.fmod(arg, np.longdouble(2) * np.pi).astype(float)
    return np.exp(-1j * phase)


def build_g(cfg):
    """G as a dense matrix; it depends on m - n only."""
    n = cfg.dim
    ls = _positions(n).astype(float)
    mu = np.arange(-(n - 1), n)
    free = 0.5 * cfg.hbar * ls * ls - cfg.gamma * ls
    free = np.fmod(free, TWO_PI)
    profile = np.exp(-1j * (free[None, :] - TWO_PI * np.outer(mu, ls) / n)).sum(axis=1) / n
    idx = np.arange(n)
    return profile[(idx[:, None] - idx[None, :]) + (n - 1)]


_G_CACHE = {}


def _g_checked(cfg):
    key = (cfg.dim, cfg.gamma, cfg.hbar)
    if key not in _G_CACHE:
        g = build_g(cfg)
        err = unitarity_error(g)
        if err > UNITARITY_TOL:
            raise RuntimeError(f"G is not unitary: max|GG^+ - I| = {err:.2e}")
        _G_CACHE[key] = g
    return _G_CACHE[key]


def unitarity_error(u):
    return float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))))


def build_u(cfg, K):
    """Floquet operator U = B G."""
    b = build_b(cfg, K)
    if np.max(np.abs(np.abs(b) - 1.0)) > UNITARITY_TOL:
        raise RuntimeError("B has non-unit diagonal entries")
    return FloquetOperator(cfg.dim, b[:, None] * _g_checked(cfg))


def _angles_eig(matrix):
    w = np.linalg.eigvals(matrix)
    dev = np.max(np.abs(np.abs(w) - 1.0))
    if dev > 1e-6:
        logger.warning("eigenvalues deviate from the unit circle by %.1e", dev)
    return np.angle(w)


def _angles_cayley(matrix, phi=0.0):
    """Eigenangles through the Hermitian Cayley transform i(1 - W)(1 + W)^-1, W = e^{-i phi} U.

    Its eigenvalues are tan((theta - phi)/2), so one Hermitian eigensolve
    replaces the non-Hermitian one.
    """
    n = matrix.shape[0]
    w = np.exp(-1j * phi) * matrix
    eye = np.eye(n)
    h = 1j * np.linalg.solve(eye + w, eye - w)
    h = 0.5 * (h + h.conj().T)
    t = np.linalg.eigvalsh(h)
    return 2.0 * np.arctan(t) + phi


def eigenangles(u, method="cayley"):
    """Sorted eigenangles in [0, 2 pi)."""
    matrix = u.matrix if isinstance(u, FloquetOperator) else np.asarray(u)
    try:
        theta = _angles_eig(matrix) if method == "eig" else _angles_cayley(matrix)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    if method == "cayley":
        # an eigenvalue near -1 makes the transform ill-conditioned; the trace catches it
        if abs(np.exp(1j * theta).sum() - np.trace(matrix)) > 1e-8 * matrix.shape[0]:
            logger.warning("Cayley transform inaccurate, falling back to a general eigensolve")
            theta = _angles_eig(matrix)
    return EigenangleSpectrum(np.sort(np.mod(theta, TWO_PI)))


def traces(spectrum, q_max, chunk=256):
    """``tr U^q = sum_j exp(i q theta_j)`` for q = 1..q_max."""
    if q_max < 1:
        raise ConfigurationError("q_max must be >= 1")
    theta = spectrum.angles if isinstance(spectrum, EigenangleSpectrum) else np.asarray(spectrum)
    out = np.empty(q_max, dtype=complex)
    for start in range(0, q_max, chunk):
        q = np.arange(start + 1, min(start + chunk, q_max) + 1)
        out[start : start + q.size] = np.exp(1j * np.outer(q, theta)).sum(axis=1)
    return out


def smooth(values, halfwidth):
    """Moving average over [q - h, q + h], clipped at both ends."""
    if halfwidth == 0:
        return values.copy()
    c = np.concatenate([[0.0], np.cumsum(values)])
    idx = np.arange(values.size)
    lo = np.maximum(idx - halfwidth, 0)
    hi = np.minimum(idx + halfwidth, values.size - 1)
    return (c[hi + 1] - c[lo]) / (hi - lo + 1)


def cross_form_factor(traces_lam, traces_zero, dim, smoothing_halfwidth=5, beta=0, lam=0.0, order="complex"):
    """``(1/N) |mean_members tr U_Lambda^q tr U_0^-q|`` smoothed over q.

    ``traces_*`` have shape ``(members, q_max)``.  The member average always
    comes first.  With ``order="complex"`` the complex mean is smoothed before
    the modulus, so sampling noise averages out instead of adding a positive
    floor; ``order="modulus"`` smooths the modulus.  ``raw`` is the unsmoothed
    modulus in both cases.
    """
    if order not in SMOOTHING_ORDERS:
        raise ConfigurationError(f"order must be one of {SMOOTHING_ORDERS}")
    traces_lam = np.atleast_2d(traces_lam)
    traces_zero = np.atleast_2d(traces_zero)
    if traces_lam.shape != traces_zero.shape:
        raise ConfigurationError("paired trace arrays must share (members, q) shape")
    members = traces_lam.shape[0]
    mean = np.mean(traces_lam * traces_zero.conj(), axis=0) / dim
    raw = np.abs(mean)
    if order == "complex":
        values = np.abs(smooth(mean.real, smoothing_halfwidth) + 1j * smooth(mean.imag, smoothing_halfwidth))
    else:
        values = smooth(raw, smoothing_halfwidth)
    k = np.arange(1, raw.size + 1) / dim
    flag = "few-members" if members < 2 else ""
    if flag:
        logger.warning("cross form factor from a single member")
    return FormFactorCurve(beta, lam, k, values, raw, members, "data", flag)


def lambda_kicked(dim, delta_k, beta):
    """``N dK^2 / (8 beta pi^2)``."""
    if delta_k < 0:
        raise ConfigurationError("delta K must be >= 0")
    return dim * delta_k * delta_k / (8.0 * beta * np.pi**2)


def delta_k_from_lambda(dim, lam, beta):
    return float(np.sqrt(8.0 * beta * np.pi**2 * lam / dim))


def _member_angles(cfg, member):
    base = cfg.base_k_values[member]
    out = np.empty((len(cfg.delta_k_values), cfg.dim))
    for j, dk in enumerate(cfg.delta_k_values):
        out[j] = eigenangles(build_u(cfg, base + dk), cfg.eig_method).angles
    return out


def generate_ensemble(cfg, jobs=1):
    """Eigenangles of every member at K_m + dK for each dK in the schedule."""
    if jobs and jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            blocks = list(pool.map(_member_angles, [cfg] * cfg.members, range(cfg.members)))
    else:
        blocks = [_member_angles(cfg, m) for m in range(cfg.members)]
    return KickedRotorFamily(cfg, np.stack(blocks), cfg.lambdas)


def family_traces(family):
    """Traces for every (member, dK); shape ``(members, n_dk, q_max)``."""
    cfg = family.config
    return np.stack([[traces(a, cfg.q_max) for a in member] for member in family.angles])


def family_form_factors(family, tr=None):
    tr = family_traces(family) if tr is None else tr
    cfg = family.config
    return [
        cross_form_factor(tr[:, j], tr[:, 0], cfg.dim, cfg.smoothing_halfwidth, cfg.beta, lam, cfg.smoothing_order)
        for j, lam in enumerate(family.lambdas)
    ]


def unfolded_band(family):
    """Whole circle as a periodic band of length N for the counting estimators."""
    from .ensembles import UnfoldedBand

    n = family.config.dim
    levels = [[a * n / TWO_PI for a in member] for member in family.angles]
    return UnfoldedBand(family.beta, n, 0.0, float(n), levels, tuple(family.lambdas), periodic=True)
