"""Closed-form approximations for the cross-form factor, number covariance and PNV.

Conventions: ``k`` is conjugate to the unfolded distance ``r`` through
``exp(-2 pi i k r)``, so every form factor is even in ``k`` and
``sigma11(r) = int K(k) sin^2(pi k r) / (pi k)^2 dk`` over the real line.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from . import ConfigurationError, QuadratureError, check_beta

EPSILON_DEFAULTS = {1: 0.3676, 2: 0.1035, 4: 0.0149}
FIT_GRID = tuple(float(r) for r in range(5, 21))

PI2 = np.pi**2


@dataclass(frozen=True)
class CutoffEpsilon:
    beta: int
    value: float

    def __post_init__(self):
        object.__setattr__(self, "beta", check_beta(self.beta))
        if not self.value > 0:
            raise ConfigurationError("cutoff epsilon must be positive")

    @classmethod
    def default(cls, beta):
        beta = check_beta(beta)
        return cls(beta, EPSILON_DEFAULTS[beta])


def _eps_value(eps):
    return eps.value if isinstance(eps, CutoffEpsilon) else float(eps)


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def k_smallk(k, beta, lam, eps):
    """Small-k form with exponential cut-off: ``(2|k|/beta) exp(-2(beta pi^2 Lambda + eps)|k|)``."""
    ak = np.abs(np.asarray(k, dtype=float))
    rate = beta * PI2 * lam + _eps_value(eps)
    return _scalar(2.0 * ak / beta * np.exp(-2.0 * rate * ak))


def k_zero_exact(k, beta):
    """Form factor ``1 - b2(k)`` of the Gaussian ensembles at Lambda=0.

    beta=4 is on the scale of distinct (Kramers-reduced) levels and diverges
    logarithmically at |k| = 1.
    """
    beta = check_beta(beta)
    ak = np.abs(np.asarray(k, dtype=float))
    out = np.ones_like(ak)
    with np.errstate(divide="ignore", invalid="ignore"):
        if beta == 1:
            lo = ak <= 1
            out[lo] = 2 * ak[lo] - ak[lo] * np.log1p(2 * ak[lo])
            hi = ~lo
            out[hi] = 2 - ak[hi] * np.log((2 * ak[hi] + 1) / (2 * ak[hi] - 1))
        elif beta == 2:
            out = np.minimum(ak, 1.0)
        else:
            lo = ak < 2
            out[lo] = ak[lo] / 2 - ak[lo] / 4 * np.log(np.abs(1 - ak[lo]))
    return _scalar(out)


def k_product(k, beta, lam):
    """``K(k;0) exp(-2 beta pi^2 Lambda |k|)``."""
    ak = np.abs(np.asarray(k, dtype=float))
    return _scalar(k_zero_exact(ak, beta) * np.exp(-2.0 * beta * PI2 * lam * ak))


def sigma11_compact(r, beta, lam, eps):
    """``(1/beta pi^2) ln[1 + r^2 pi^2 / (beta pi^2 Lambda + eps)^2]``; meant for r >~ 1."""
    r = np.asarray(r, dtype=float)
    cut = beta * PI2 * lam + _eps_value(eps)
    return _scalar(np.log1p((r * np.pi / cut) ** 2) / (beta * PI2))


def pnv_infinity(beta, lam, eps):
    """Large-r PNV from the compact formula: ``(4/beta pi^2) ln((eps + beta pi^2 Lambda)/eps)``."""
    e = _eps_value(eps)
    if lam < 0 or e <= 0:
        raise ConfigurationError("need Lambda >= 0 and eps > 0")
    return float(4.0 / (beta * PI2) * np.log1p(beta * PI2 * lam / e))


def pnv_from_k_integral(beta, lam, kernel_zero, kernel_lam, breakpoints=(0.5, 1.0, 2.0, 4.0), rel_tol=1e-8):
    """Large-r PNV ``int [K(k;0) - K(k;Lambda)] / (pi k)^2 dk`` over the real line.

    The kernels are integrated as a difference, so the 1/k^2 singularity of
    each term cancels at the origin.  ``kernel_*`` accept arrays of ``k >= 0``.
    """
    if lam == 0:
        return 0.0

    def f(k):
        if k == 0.0:
            return 0.0
        d = float(kernel_zero(np.array([k]))[0] - kernel_lam(np.array([k]))[0])
        return d / (PI2 * k * k)

    edges = (0.0,) + tuple(breakpoints) + (np.inf,)
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(f, a, b, limit=400, epsrel=rel_tol, epsabs=1e-12)
        total += val
        err += e
    if err > max(1e-6, 1e-4 * abs(total)):
        raise QuadratureError("PNV integral did not converge", err)
    return 2.0 * total


def fit_epsilon(beta, exact_sigma2, r_grid=FIT_GRID):
    """Least-squares cut-off so the compact formula at Lambda=0 matches exact sigma2 at large r.

    ``exact_sigma2`` maps an array of r to the exact number variance.
    """
    beta = check_beta(beta)
    r = np.asarray(r_grid, dtype=float)
    target = np.asarray(exact_sigma2(r), dtype=float)

    def residual(p):
        return sigma11_compact(r, beta, 0.0, np.exp(p[0])) - target

    # fit log(eps) so eps stays positive
    res = optimize.least_squares(residual, x0=[np.log(EPSILON_DEFAULTS[beta])], xtol=1e-14, ftol=1e-14)
    if not res.success:
        raise RuntimeError(f"epsilon fit failed for beta={beta}: {res.message}; residuals {res.fun}")
    return CutoffEpsilon(beta, float(np.exp(res.x[0])))
