"""Exact parametric correlation functions and cross-form factors by quadrature.

k-space is the primary route.  The beta=2 form factor is closed form; for
beta=1 and 4 the form factor is a double integral over ``u = xy`` and
``v = x^2``.  The inner integrand depends on ``v`` only through
``v + u^2/v`` and carries the measure ``dv/v``, so ``v = |u| e^s`` folds it
onto ``s >= 0`` and turns the denominator into

    D(s) = c - 4|u| sinh^2(s/2),   c = (1 - |u|)^2 - k'^2   (k' = 2|k| or |k|),

which is free of cancellation for small k.  ``D`` only vanishes at the corner
``c = 0``, where the polynomial prefactor vanishes too; there the outer
integrand has an inverse square-root endpoint singularity, removed by
``u = u_corner -/+ t^2``.  No rule ever evaluates on a domain boundary.

The r-space triple integrals for beta=1 and 4 are oscillatory and only used
to validate the k-space route.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import QuadratureError, check_beta
from .theory import k_zero_exact

logger = logging.getLogger(__name__)

PI2 = np.pi**2
TAYLOR_THRESHOLD = 1e-6
LOG_WINDOW = 1e-6


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    max_subdivisions: int = 200
    delta_reg: float = 1e-6
    panel_width: float = 0.2
    nodes_per_panel: int = 16
    k_cap: float = 60.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.delta_reg > 0):
            raise ValueError("quadrature tolerances and delta_reg must be positive")


DEFAULT_SETTINGS = QuadratureSettings()


def _quad(f, a, b, q, points=None, rel=None, abs_=None, **kw):
    """scipy quad with warnings turned into an error estimate check."""
    # quadpack refuses relative targets below 50 machine epsilons
    rel = max(q.rel_tol if rel is None else rel, 50 * np.finfo(float).eps * 1.01)
    abs_ = q.abs_tol if abs_ is None else abs_
    if points is not None:
        points = [p for p in points if a < p < b] or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, points=points, limit=q.max_subdivisions, epsrel=rel, epsabs=abs_, **kw)
    return val, err


def _check(val, err, q, what):
    if err > max(10 * q.rel_tol * abs(val), 10 * q.abs_tol):
        raise QuadratureError(f"{what}: tolerance not met", err)


# ---------------------------------------------------------------- beta = 2


def k2_exact(k, lam):
    """Closed-form beta=2 cross-form factor.

    Both piecewise branches equal
    ``exp(-a ||k| - k^2|) (1 - exp(-2a min(|k|, k^2))) / (2a|k|)``, ``a = 4 pi^2 Lambda``,
    which is the form evaluated here (no sinh overflow, continuous at |k|=1).
    """
    ak = np.abs(np.asarray(k, dtype=float))
    a = 4.0 * PI2 * lam
    m = np.minimum(ak, ak * ak)
    x = 2.0 * a * m
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(a * ak < TAYLOR_THRESHOLD, 1.0 - x / 2 + x * x / 6, -np.expm1(-x) / x)
        out = np.exp(-a * np.abs(ak - ak * ak)) * ratio * m / ak
    out = np.where(ak == 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------- beta = 1, 4


def _inner(c, au, expo, lam_coef, span, q):
    """2 * int_0^span exp(expo + lam_coef*D) / D^2 ds with D = c - 4|u| sinh^2(s/2)."""
    if span <= 0:
        return 0.0, 0.0

    def f(s):
        d = c - 4.0 * au * np.sinh(0.5 * s) ** 2
        return np.exp(expo + lam_coef * d) / (d * d)

    width = np.sqrt(abs(c) / au) if au > 0 else span
    val, err = _quad(f, 0.0, span, q, points=[width, 10 * width], rel=q.rel_tol * 1e-3, abs_=0.0)
    return 2.0 * val, 2.0 * err


def k1_exact(k, lam, q=DEFAULT_SETTINGS):
    """beta=1 cross-form factor (double integral); even in k."""
    k = abs(float(k))
    if k == 0.0:
        return 0.0
    lo, hi = max(1.0, 2 * k - 1), 2 * k + 1
    worst = [0.0]

    def outer(t):
        u = hi - t * t
        # (u-1)^2 - 4k^2 factored; u - 1 - 2k = -t^2 exactly
        c = -t * t * (u - 1.0 + 2 * k)
        inner, err = _inner(c, u, -2 * PI2 * lam * u * k, -0.5 * PI2 * lam, np.log(u), q)
        if inner:
            worst[0] = max(worst[0], err / abs(inner))
        return 2 * t * (1.0 - (u - 2 * k) ** 2) * inner

    span = np.sqrt(hi - lo)
    val, err = _quad(outer, 0.0, span, q, rel=q.rel_tol * 0.1, abs_=0.0)
    val *= 2 * k * k
    err = 2 * k * k * err + worst[0] * abs(val)
    _check(val, err, q, f"k1_exact(k={k}, Lambda={lam})")
    return val


def k4_exact(k, lam, q=DEFAULT_SETTINGS):
    """beta=4 cross-form factor (double integral); even in k.

    Diverges like ``-ln|1 - |k|| / 4`` at |k| = 1 for every Lambda: as u -> 0
    the inner integral tends to 1/(2u^2), so the outer integrand tends to 1/u
    whatever the damping.  Within ``LOG_WINDOW`` of the singularity the value
    is continued from the window edge along that law.
    """
    k = abs(float(k))
    if k == 0.0:
        return 0.0
    if k == 1.0:
        return np.inf
    gap = abs(1.0 - k)
    if gap < LOG_WINDOW:
        edge = 1.0 - LOG_WINDOW if k < 1.0 else 1.0 + LOG_WINDOW
        return _k4_quadrature(edge, lam, q) - 0.25 * np.log(gap / LOG_WINDOW)
    return _k4_quadrature(k, lam, q)


def _k4_quadrature(k, lam, q):
    lo = max(-1.0, 1.0 - k)
    worst = [0.0]

    def h(u, c=None):
        au = abs(u)
        if c is None:
            c = (1.0 - au - k) * (1.0 - au + k)
        inner, err = _inner(c, au, -8 * PI2 * lam * u * k, 4 * PI2 * lam, -np.log(au), q)
        if inner:
            worst[0] = max(worst[0], err / abs(inner))
        return ((u + k) ** 2 - 1.0) * inner

    scale = abs(1.0 - k)
    if k < 1.0:
        # corner at u = lo > 0
        span = np.sqrt(1.0 - lo)
        pts = [np.sqrt(j * lo) for j in (1, 10, 100)]
        # 1 - u - k = -t^2 exactly
        g = lambda t: 2 * t * h(lo + t * t, -t * t * (1.0 - lo - t * t + k))
        val, err = _quad(g, 0.0, span, q, points=pts, rel=q.rel_tol * 0.1, abs_=0.0)
    else:
        # log singularity at u = 0 inside the range
        pts = [0.0] + [s * j * scale for j in (1, 10, 100) for s in (-1, 1)]
        val, err = _quad(h, lo, 1.0, q, points=pts, rel=q.rel_tol * 0.1, abs_=0.0)
    val *= k * k / 4
    err = k * k / 4 * err + worst[0] * abs(val)
    _check(val, err, q, f"k4_exact(k={k}, Lambda={lam})")
    return val


class KernelHandle:
    """Vectorized, memoized K(k; Lambda) for one (beta, Lambda)."""

    def __init__(self, beta, lam, q=DEFAULT_SETTINGS):
        self.beta = check_beta(beta)
        self.lam = float(lam)
        self.q = q
        if self.lam == 0.0:
            self.method = "zero-lambda"
        elif self.beta == 2:
            self.method = "closed-form"
        else:
            self.method = "double-integral"
        self._memo = {}

    @property
    def tail(self):
        """Limit of K as |k| -> infinity."""
        return 1.0 if self.lam == 0.0 else 0.0

    def _one(self, k):
        if self.beta == 1:
            return k1_exact(k, self.lam, self.q)
        return k4_exact(k, self.lam, self.q)

    def __call__(self, k):
        k = np.abs(np.asarray(k, dtype=float))
        if self.method == "zero-lambda":
            return k_zero_exact(k, self.beta)
        if self.method == "closed-form":
            return k2_exact(k, self.lam)
        flat = k.ravel()
        out = np.empty_like(flat)
        for i, kk in enumerate(flat):
            key = float(kk)
            if key not in self._memo:
                self._memo[key] = self._one(key)
            out[i] = self._memo[key]
        return out.reshape(k.shape) if k.ndim else float(out[0])


_HANDLES = {}


def kernel(beta, lam, q=DEFAULT_SETTINGS):
    """Shared KernelHandle so repeated requests reuse evaluated nodes."""
    key = (check_beta(beta), float(lam), q)
    if key not in _HANDLES:
        _HANDLES[key] = KernelHandle(beta, lam, q)
    return _HANDLES[key]


# ---------------------------------------------------------------- k -> sigma11


def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _panel_edges(beta, width, k_end):
    edges = set(np.round(np.arange(0.0, k_end + 0.5 * width, width), 12))
    edges.update(e for e in (0.5, 1.0, 1.5, 2.0) if e < k_end)
    if beta == 4:
        # geometric grading onto the log singularity at |k| = 1
        # (the log itself is subtracted; this only resolves the (1-k) ln|1-k| remainder)
        for j in range(1, 17):
            edges.update((1.0 - width * 2.0**-j, 1.0 + width * 2.0**-j))
    return np.array(sorted(edges))


def _k_rule(handle, r_max, q):
    """Panel nodes (coarse and fine Gauss rules) covering [0, k_end]."""
    # two oscillations of sin^2(pi k r) per panel are exact to ~1e-12 with 16 nodes
    width = min(q.panel_width, 2.0 / max(r_max, 1.0))
    n_fine = q.nodes_per_panel
    n_coarse = max(2, n_fine // 2)
    if handle.tail == 1.0:
        k_end = 40.0
    else:
        # extend until the kernel envelope is negligible
        k_end = 3.0
        while k_end < q.k_cap:
            probe = np.linspace(k_end - 1.0, k_end, 9)[1:]
            if np.max(np.abs(handle(probe))) < q.abs_tol * 1e-3:
                break
            k_end += 1.0
        else:
            logger.warning("kernel beta=%s Lambda=%s still above tolerance at k_cap", handle.beta, handle.lam)
    edges = _panel_edges(handle.beta, width, k_end)
    a, b = edges[:-1, None], edges[1:, None]
    rules = []
    for n in (n_fine, n_coarse):
        x, w = _gauss(n)
        rules.append(((a + (b - a) * x).ravel(), ((b - a) * w).ravel()))
    return rules


def _sin2_weight(k, r):
    """sin^2(pi k r) / (pi k)^2 with its k -> 0 limit r^2."""
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sin(np.pi * k * r) ** 2 / (PI2 * k * k)
    return np.where(k == 0, r * r, out)


LOG_ZONE = (0.5, 1.5)


def _log_part(rr, q):
    """``int over LOG_ZONE of -ln|1 - k|/4 * sin^2(pi k r)/(pi k)^2``, log weight handled by QUADPACK."""
    f = lambda k: float(_sin2_weight(k, rr))
    a, _ = integrate.quad(f, LOG_ZONE[0], 1.0, weight="alg-logb", wvar=(0, 0), limit=q.max_subdivisions)
    b, _ = integrate.quad(f, 1.0, LOG_ZONE[1], weight="alg-loga", wvar=(0, 0), limit=q.max_subdivisions)
    return -0.25 * (a + b)


def _log_subtracted(handle, k):
    """K - tail, plus ln|1 - k|/4 inside LOG_ZONE for beta=4."""
    out = handle(k) - handle.tail
    if handle.beta == 4:
        zone = (k > LOG_ZONE[0]) & (k < LOG_ZONE[1])
        out[zone] += 0.25 * np.log(np.abs(1.0 - k[zone]))
    return out


def _tail_correction(handle, nodes):
    """Integral beyond the last node: at Lambda=0, beta=1, K - 1 ~ -1/(12 k^2) and sin^2 averages to 1/2."""
    if handle.method != "zero-lambda" or handle.beta != 1:
        return 0.0
    k_end = np.ceil(nodes.max())
    return -1.0 / (36.0 * PI2 * k_end**3)


def sigma11_from_k_with_error(r, lam, kern, q=DEFAULT_SETTINGS):
    """Number covariance from a form factor and a quadrature error estimate.

    ``sigma11 = tail*r + 2 int_0^inf (K - tail) sin^2(pi k r)/(pi k)^2 dk``
    where ``tail`` is K at infinity (1 at Lambda=0, else 0).  For beta=4 the
    ``-ln|1 - k|/4`` singularity is integrated separately with a log weight.
    """
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    (kf, wf), (kc, wc) = _k_rule(kern, r_arr.max(), q)
    Kf = _log_subtracted(kern, kf)
    Kc = _log_subtracted(kern, kc)
    vals, errs = [], []
    for rr in r_arr:
        if rr == 0:
            vals.append(0.0)
            errs.append(0.0)
            continue
        base = kern.tail * rr + (2.0 * _log_part(rr, q) if kern.beta == 4 else 0.0) + _tail_correction(kern, kf)
        fine = base + 2.0 * np.sum(wf * Kf * _sin2_weight(kf, rr))
        coarse = base + 2.0 * np.sum(wc * Kc * _sin2_weight(kc, rr))
        vals.append(fine)
        errs.append(abs(fine - coarse))
    vals, errs = np.array(vals), np.array(errs)
    if np.ndim(r) == 0:
        return float(vals[0]), float(errs[0])
    return vals, errs


def sigma11_from_k(r, lam, kern, q=DEFAULT_SETTINGS):
    """``int K(k;Lambda) sin^2(pi k r)/(pi k)^2 dk`` over the real line."""
    return sigma11_from_k_with_error(r, lam, kern, q)[0]


def exact_sigma11(r, beta, lam, q=DEFAULT_SETTINGS):
    return sigma11_from_k(r, lam, kernel(beta, lam, q), q)


def exact_sigma2(r, beta, q=DEFAULT_SETTINGS):
    return exact_sigma11(r, beta, 0.0, q)


def r11_fourier(r, kern, q=DEFAULT_SETTINGS):
    """``R11 = 1 + 2 int_0^inf K cos(2 pi k r) dk`` for Lambda > 0 kernels."""
    if kern.tail != 0.0:
        raise ValueError("the Fourier route needs a decaying (Lambda > 0) kernel")
    (kf, wf), _ = _k_rule(kern, max(abs(float(r)), 1.0), q)
    total = np.sum(wf * _log_subtracted(kern, kf) * np.cos(2 * np.pi * kf * r))
    if kern.beta == 4:
        f = lambda k: np.cos(2 * np.pi * k * r)
        a, _ = integrate.quad(f, LOG_ZONE[0], 1.0, weight="alg-logb", wvar=(0, 0), limit=q.max_subdivisions)
        b, _ = integrate.quad(f, 1.0, LOG_ZONE[1], weight="alg-loga", wvar=(0, 0), limit=q.max_subdivisions)
        total -= 0.25 * (a + b)
    return float(1.0 + 2.0 * total)


def sigma11_from_y(r, lam, y_callable, q=DEFAULT_SETTINGS):
    """``-int_{-r}^{r} (r - |s|) Y11(s) ds`` for an even cluster function."""
    if r == 0:
        return 0.0
    val, err = _quad(lambda s: (r - s) * y_callable(s), 0.0, r, q)
    _check(val, err, q, "sigma11_from_y")
    return -2.0 * val


# ---------------------------------------------------------------- r-space


def _r11_beta2(r, lam, q):
    """Separable double integral: 1 + A(r) B(r)."""
    w = np.pi * r
    a, ea = _quad(lambda x: np.exp(PI2 * lam * x * x), 0.0, 1.0, q, weight="cos", wvar=w)
    if lam > 0:
        y_max = max(2.0, np.sqrt(1.0 + np.log(1.0 / q.abs_tol) / (PI2 * lam)) + 1.0)
        g = lambda y: np.exp(-PI2 * lam * y * y - q.delta_reg * y)
        b, eb = _quad(g, 1.0, y_max, q, weight="cos", wvar=w)
    else:
        # delta-regularized oscillatory tail, closed form
        z = complex(-q.delta_reg, w)
        b = float((-np.exp(z) / z).real)
        eb = 0.0
    return 1.0 + a * b, abs(a) * eb + abs(b) * ea


def _graded_nodes(lo_exp, hi, uniform_width, n=8):
    """Gauss nodes on log-graded panels in (0, 0.1] followed by uniform panels up to ``hi``."""
    log_edges = 10.0 ** np.arange(lo_exp, -1.0 + 1e-9, 0.5)
    uni = np.append(np.arange(0.1, hi, uniform_width), hi)
    edges = np.unique(np.concatenate([[0.0], log_edges, uni]))
    x, wt = _gauss(n)
    a, b = edges[:-1, None], edges[1:, None]
    return (a + (b - a) * x).ravel(), ((b - a) * wt).ravel()


def _r11_beta1(r, lam, q):
    """Re of the beta=1 triple integral, symmetrized to y >= x."""
    if lam <= 0:
        raise ValueError("the beta=1 r-space route is implemented for Lambda > 0")
    c = 0.5 * PI2 * lam
    xy_max = np.sqrt(1.0 + np.log(1.0 / q.abs_tol) / c)
    w_nodes, w_wts = _graded_nodes(-14.0, 2.0, 0.02)
    z = 1.0 - w_nodes

    def inner(x, y):
        p = x * y - z
        # (xy - z)^2 - (x^2 - 1)(y^2 - 1) without cancellation
        den = (x - y) ** 2 + 2 * w_nodes * (x * y - 1.0) + w_nodes**2
        f = p * p * w_nodes * (2.0 - w_nodes) / (den * den)
        expo = c * (x * x + y * y + z * z - 2 * x * x * y * y - 1.0) - q.delta_reg * p
        return np.sum(w_wts * f * np.exp(expo) * np.cos(np.pi * r * p))

    def middle(x):
        y_max = xy_max / x
        if y_max <= x:
            return 0.0
        val, _ = _quad(lambda y: inner(x, y), x, y_max, q, points=[x + 1e-3, x + 1e-1], rel=1e-6, abs_=1e-10)
        return val

    val, err = _quad(middle, 1.0, np.sqrt(xy_max), q, rel=1e-5, abs_=1e-8)
    return 1.0 + 2.0 * val, err


def _r11_beta4(r, lam, q):
    """Re of the beta=4 triple integral over x in [-1,1], y in [0,1], z >= 1."""
    if lam <= 0:
        raise ValueError("the beta=4 r-space route is implemented for Lambda > 0")
    c = 4.0 * PI2 * lam
    z_max = np.sqrt(1.0 + np.log(1.0 / q.abs_tol) / c)
    w_nodes, w_wts = _graded_nodes(-14.0, z_max - 1.0, 0.02)
    z = 1.0 + w_nodes

    def inner(x, y):
        p = x * y - z
        den = (x - y) ** 2 + 2 * w_nodes * (1.0 - x * y) + w_nodes**2
        f = p * p * w_nodes * (2.0 + w_nodes) / (den * den)
        expo = -c * (x * x + y * y + z * z - 2 * x * x * y * y - 1.0) + q.delta_reg * p
        return np.sum(w_wts * f * np.exp(expo) * np.cos(2 * np.pi * r * p))

    def middle(x):
        pts = [x] if x > 0 else None
        val, _ = _quad(lambda y: inner(x, y), 0.0, 1.0, q, points=pts, rel=1e-6, abs_=1e-10)
        return val

    val, err = _quad(middle, -1.0, 1.0, q, points=[0.0], rel=1e-5, abs_=1e-8)
    return 1.0 + val, err


def r11_exact(r, lam, beta, q=DEFAULT_SETTINGS):
    """Density-density correlation ``R11(r; Lambda)`` from the r-space integrals."""
    beta = check_beta(beta)
    if beta == 2:
        val, err = _r11_beta2(r, lam, q)
    elif beta == 1:
        val, err = _r11_beta1(r, lam, q)
    else:
        val, err = _r11_beta4(r, lam, q)
    return val
