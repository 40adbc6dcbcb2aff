"""Counting statistics of unfolded spectra: number covariance, number variance, PNV.

All estimators share one window set per (member, r).  Windows are half-open,
``[start, start + r)``, placed identically in the two spectra of a pair.
Per-member partial sums are the unit of aggregation, so members can be
processed independently and merged, and the bootstrap resamples members
rather than (correlated) window positions.

For each cell (r, Lambda) with counts ``n0`` (parameter 0) and ``nL``:

* ``sigma11 = <n0 nL> - <n0><nL>``
* ``sigma2``  = pooled variance ``(var n0 + var nL) / 2``
* ``pnv = var(nL - n0)``, the mean square of the count difference once
  the (vanishing in expectation) mean shift is removed

which makes ``pnv == 2 (sigma2 - sigma11)`` an algebraic identity on any
sample.  At Lambda=0 the pooled variance is just ``var n0``.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import ConfigurationError

logger = logging.getLogger(__name__)

MIN_MEMBERS_FOR_ERRORS = 8
STATISTICS = ("sigma11", "sigma2", "pnv")
CSV_COLUMNS = ("beta", "lambda", "r", "statistic", "estimate", "std_error", "members", "N")


@dataclass(frozen=True)
class WindowScheme:
    r_values: tuple = (1.0, 5.0, 10.0)
    stride: float = 1.0
    placement: str = "sliding"

    def __post_init__(self):
        object.__setattr__(self, "r_values", tuple(float(r) for r in self.r_values))
        if not self.r_values or any(r <= 0 for r in self.r_values):
            raise ConfigurationError("window r_values must be positive")
        if self.stride <= 0:
            raise ConfigurationError("window stride must be positive")
        if self.placement not in ("sliding", "disjoint"):
            raise ConfigurationError(f"unknown window placement {self.placement!r}")

    def starts(self, lo, hi, r, periodic=False):
        """Window start points inside ``[lo, hi)``; overflowing windows are skipped."""
        step = self.stride if self.placement == "sliding" else r
        last = hi if periodic else hi - r
        if last < lo or (not periodic and r > hi - lo):
            return np.empty(0)
        n = int(np.floor((last - lo) / step + 1e-9))
        starts = lo + step * np.arange(n + 1)
        if periodic:
            starts = starts[starts < hi]
        return starts


def count_in_window(levels, start, r):
    """Number of levels in ``[start, start + r)``."""
    if r <= 0:
        return 0
    i0, i1 = np.searchsorted(levels, [start, start + r], side="left")
    return int(i1 - i0)


def window_counts(levels, starts, r, period=None):
    """Vectorized counts for many windows; ``period`` wraps windows around a circle."""
    levels = np.asarray(levels)
    if period is not None:
        levels = np.concatenate([levels, levels + period])
    return np.searchsorted(levels, starts + r) - np.searchsorted(levels, starts)


def bootstrap_error(member_statistics, resamples=1000, rng=None):
    """Standard deviation of the bootstrap-resampled mean."""
    x = np.asarray(member_statistics, dtype=float)
    if x.size == 0:
        raise ValueError("bootstrap_error needs at least one value")
    if resamples < 100:
        raise ConfigurationError("use at least 100 bootstrap resamples")
    rng = np.random.default_rng(0) if rng is None else rng
    idx = rng.integers(0, x.size, size=(resamples, x.size))
    return float(x[idx].mean(axis=1).std(ddof=1))


@dataclass
class CovarianceRow:
    beta: int
    lam: float
    r: float
    statistic: str
    estimate: float
    std_error: float
    members: int
    N: int
    flag: str = ""


@dataclass
class CovarianceTable:
    beta: int
    statistic_kind: str
    rows: list = field(default_factory=list)

    def lookup(self, r, lam):
        for row in self.rows:
            if np.isclose(row.r, r) and np.isclose(row.lam, lam):
                return row
        raise KeyError((r, lam))

    def estimates(self):
        return np.array([row.estimate for row in self.rows])


def _partial_sums(n0, nl):
    """Sums needed by every statistic of one member and one cell."""
    n0 = n0.astype(float)
    nl = nl.astype(float)
    return np.array([n0.size, n0.sum(), nl.sum(), (n0 * n0).sum(), (nl * nl).sum(), (n0 * nl).sum()])


def _statistics(s):
    """(sigma11, sigma2, pnv) from summed partials; works on stacked leading axes."""
    w, s0, sl, s00, sll, s0l = np.moveaxis(s, -1, 0)
    m0, ml = s0 / w, sl / w
    cov = s0l / w - m0 * ml
    var0 = s00 / w - m0 * m0
    varl = sll / w - ml * ml
    sigma2 = 0.5 * (var0 + varl)
    pnv = var0 + varl - 2.0 * cov
    return cov, sigma2, pnv


@dataclass
class CountingResult:
    """Estimates for every (r, Lambda) cell sharing one window set."""

    beta: int
    N: int
    members: int
    r_values: tuple
    lambdas: tuple
    sigma11: np.ndarray
    sigma2: np.ndarray
    pnv: np.ndarray
    sigma11_err: np.ndarray
    sigma2_err: np.ndarray
    pnv_err: np.ndarray
    flag: str = ""

    def table(self, kind):
        if kind not in STATISTICS:
            raise ValueError(kind)
        est, err = getattr(self, kind), getattr(self, kind + "_err")
        table = CovarianceTable(self.beta, kind)
        lam_idx = [0] if kind == "sigma2" else range(len(self.lambdas))
        for j in lam_idx:
            for i, r in enumerate(self.r_values):
                table.rows.append(
                    CovarianceRow(self.beta, self.lambdas[j], r, kind, float(est[i, j]), float(err[i, j]),
                                  self.members, self.N, self.flag)
                )
        return table

    def identity_residual(self):
        """max |pnv - 2 (sigma2 - sigma11)| over all cells."""
        return float(np.max(np.abs(self.pnv - 2.0 * (self.sigma2 - self.sigma11))))


def estimate_counting(band, scheme, resamples=1000, seed=0):
    """Estimate sigma11, sigma2 and pnv for all (r, Lambda) cells of a band.

    ``band.levels[m][0]`` is the reference spectrum of member ``m``; the
    other entries are its partners at ``band.lambdas[1:]``.
    """
    members = band.members
    n_lam = len(band.levels[0])
    r_values = scheme.r_values
    period = band.hi - band.lo if band.periodic else None
    partial = np.zeros((members, len(r_values), n_lam, 6))
    for m, spectra in enumerate(band.levels):
        if len(spectra) != n_lam:
            raise ConfigurationError("every member needs spectra at the same parameter values")
        for i, r in enumerate(r_values):
            starts = scheme.starts(band.lo, band.hi, r, periodic=band.periodic)
            if starts.size == 0:
                raise ConfigurationError(f"window r={r} does not fit the band [{band.lo}, {band.hi})")
            n0 = window_counts(spectra[0], starts, r, period)
            for j in range(n_lam):
                partial[m, i, j] = _partial_sums(n0, window_counts(spectra[j], starts, r, period))

    sigma11, sigma2, pnv = _statistics(partial.sum(axis=0))

    flag = ""
    if members < MIN_MEMBERS_FOR_ERRORS:
        flag = "few-members"
        warnings.warn(f"only {members} members; standard errors are not reported", stacklevel=2)
        errs = [np.full_like(sigma11, np.nan)] * 3
    else:
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, members, size=(resamples, members))
        boot = np.stack([np.stack(_statistics(partial[row].sum(axis=0))) for row in idx])
        errs = list(boot.std(axis=0, ddof=1))

    lambdas = tuple(band.lambdas) if band.lambdas else tuple(range(n_lam))
    return CountingResult(band.beta, band.dim, members, tuple(r_values), lambdas,
                          sigma11, sigma2, pnv, errs[0], errs[1], errs[2], flag)


def estimate_sigma11(band, scheme, resamples=1000, seed=0):
    return estimate_counting(band, scheme, resamples, seed).table("sigma11")


def estimate_pnv(band, scheme, resamples=1000, seed=0):
    return estimate_counting(band, scheme, resamples, seed).table("pnv")


def write_csv(path, tables, provenance=None):
    """Rows sorted by (beta, Lambda, r); optional trailing provenance column."""
    rows = [row for table in tables for row in table.rows]
    rows.sort(key=lambda row: (row.beta, row.lam, row.r, STATISTICS.index(row.statistic)))
    columns = CSV_COLUMNS + (("provenance",) if provenance else ())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            values = [row.beta, f"{row.lam:.10g}", f"{row.r:.10g}", row.statistic,
                      f"{row.estimate:.12g}", "" if np.isnan(row.std_error) else f"{row.std_error:.6g}",
                      row.members, row.N]
            if provenance:
                values.append(provenance)
            writer.writerow(values)
    return path
