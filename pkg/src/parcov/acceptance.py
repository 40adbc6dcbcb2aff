"""The acceptance suite: nine checks spanning the three routes.

Each ``criterion_N(ctx)`` returns a :class:`CriterionResult`; spectra and
exact curves come from :mod:`parcov.pipeline` and are cached in
``ctx.cache_dir``, so later criteria reuse what earlier ones generated.
"""

from __future__ import annotations

import filecmp
import logging
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import exact, pipeline, theory
from .config import GESection, KRSection
from .ensembles import make_parametric, member_rng, sample_ge
from .kicked_rotor import KickedRotorConfig, build_b, build_g, build_u, unitarity_error

logger = logging.getLogger(__name__)

R_GRID = (1.0, 5.0, 10.0)
COMPACT_R = tuple(np.arange(1.0, 10.01, 0.5))
COMPACT_LAMBDAS = (0.0, 0.05, 0.1, 0.15, 0.2)
FIG1_LAMBDAS = (0.0, 0.025, 0.05, 0.075)
FIG2_LAMBDAS = (0.0, 0.05, 0.1, 0.15)
FIG3_LAMBDAS = {1: (0.5, 1.0, 1.5), 2: (0.2, 0.5, 1.0)}
REFERENCE_EPSILON = theory.EPSILON_DEFAULTS


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.name}: {self.detail}"


@dataclass
class Context:
    cache_dir: str | None = ".cache"
    jobs: int = 1
    seed: int = 0
    ge_dim: int = 512
    ge_members: int = 200
    kr_dim: int = 1025
    kr_members: int = 50
    resamples: int = 1000
    q: exact.QuadratureSettings = exact.DEFAULT_SETTINGS

    def ge_band(self, beta, lambdas=pipeline.GE_LAMBDAS):
        section = GESection(beta=beta, dim=self.ge_dim, members=self.ge_members, lambdas=lambdas)
        return pipeline.ge_band(pipeline.ge_config(section, self.seed), self.cache_dir, self.jobs)

    def kr_family(self, beta):
        section = KRSection(gamma=pipeline.KR_GAMMA[beta], dim=self.kr_dim, members=self.kr_members,
                            lambdas=pipeline.KR_LAMBDAS[beta])
        return pipeline.kr_family(pipeline.kr_config(section), self.cache_dir, self.jobs)

    def exact_sigma11(self, beta, lam, r_values):
        return pipeline.exact_sigma11(beta, lam, r_values, self.q, self.cache_dir)


def _lam_index(lambdas, lam):
    hits = [j for j, value in enumerate(lambdas) if np.isclose(value, lam, rtol=1e-9, atol=1e-12)]
    if not hits:
        raise KeyError(lam)
    return hits[0]


def _within_sigma(result, beta, lambdas, ctx, label, nsig=3.0):
    rows, worst = [], 0.0
    for lam in lambdas:
        j = _lam_index(result.lambdas, lam)
        theory_vals, _ = ctx.exact_sigma11(beta, lam, result.r_values)
        for i, r in enumerate(result.r_values):
            est, err = result.sigma11[i, j], result.sigma11_err[i, j]
            z = abs(est - theory_vals[i]) / err
            worst = max(worst, z)
            rows.append((label, beta, lam, r, float(est), float(err), float(theory_vals[i]), float(z)))
    return rows, worst


# ---------------------------------------------------------------- criteria


def criterion_1(ctx):
    """PNV identity on shared windows, GE and kicked-rotor cells."""
    residuals = {}
    for beta in (1, 2):
        res = pipeline.counting(ctx.ge_band(beta), R_GRID, ctx.resamples, ctx.seed)
        residuals[f"ge-b{beta}"] = res.identity_residual()
        kr = pipeline.counting(pipeline.kr_band(ctx.kr_family(beta)), R_GRID + (100.0,), ctx.resamples, ctx.seed)
        residuals[f"kr-b{beta}"] = kr.identity_residual()
    worst = max(residuals.values())
    return CriterionResult(1, "V = 2(Sigma2 - Sigma11) identity", worst <= 1e-12,
                           f"max residual {worst:.2e} (tol 1e-12)", residuals)


def criterion_2(ctx):
    """beta=2 Monte Carlo vs exact quadrature, N=512, 200 members."""
    lambdas = (0.0, 0.05, 0.1, 0.2)
    res = pipeline.counting(ctx.ge_band(2), R_GRID, ctx.resamples, ctx.seed)
    rows, worst = _within_sigma(res, 2, lambdas, ctx, "ge")
    return CriterionResult(2, "beta=2 Monte Carlo vs exact Sigma11", worst <= 3.0,
                           f"worst |MC - exact| = {worst:.2f} SE over {len(rows)} cells (tol 3)", {"rows": rows})


def criterion_3(ctx):
    """Cut-off epsilon from the large-r fit against exact Sigma2."""
    fitted = {b: pipeline.fitted_epsilon(b, ctx.q, ctx.cache_dir).value for b in (1, 2, 4)}
    rel = {b: abs(fitted[b] / REFERENCE_EPSILON[b] - 1.0) for b in fitted}
    worst = max(rel.values())
    detail = ", ".join(f"beta={b}: {fitted[b]:.4f} vs {REFERENCE_EPSILON[b]}" for b in fitted)
    return CriterionResult(3, "epsilon reproduction", worst <= 0.10,
                           f"{detail}; worst {100 * worst:.1f}% (tol 10%)", {"fitted": fitted, "rel": rel})


def criterion_4(ctx):
    """Compact formula vs exact Sigma11 for r in [1, 10], Lambda in [0, 0.2]."""
    rows, worst, worst_cell = [], 0.0, None
    for beta in (1, 2, 4):
        eps = theory.CutoffEpsilon.default(beta)
        for lam in COMPACT_LAMBDAS:
            ex, _ = ctx.exact_sigma11(beta, lam, COMPACT_R)
            comp = theory.sigma11_compact(np.array(COMPACT_R), beta, lam, eps)
            rel = np.abs(comp / ex - 1.0)
            for r, e, c, d in zip(COMPACT_R, ex, comp, rel):
                rows.append((beta, lam, float(r), float(e), float(c), float(d)))
            i = int(np.argmax(rel))
            if rel[i] > worst:
                worst, worst_cell = float(rel[i]), (beta, lam, float(COMPACT_R[i]))
    failing = sum(1 for row in rows if row[-1] > 0.10)
    return CriterionResult(4, "compact formula fidelity", worst <= 0.10,
                           f"worst {100 * worst:.1f}% at (beta, Lambda, r)={worst_cell}; "
                           f"{failing}/{len(rows)} cells above 10%", {"rows": rows})


def criterion_5(ctx):
    """Kicked-rotor cross-form factor vs exact K over k in [0.05, 3]."""
    from .kicked_rotor import family_form_factors

    mads = {}
    for beta in (1, 2):
        family = ctx.kr_family(beta)
        for curve in family_form_factors(family):
            if not any(np.isclose(curve.lam, lam) for lam in FIG1_LAMBDAS):
                continue
            sel = (curve.k >= 0.05) & (curve.k <= 3.0)
            ref = exact.kernel(beta, round(curve.lam, 12), ctx.q)(curve.k[sel])
            mads[(beta, round(curve.lam, 6))] = float(np.mean(np.abs(curve.values[sel] - ref)))
    worst_key = max(mads, key=mads.get)
    worst = mads[worst_key]
    return CriterionResult(5, "kicked-rotor cross-form factor", worst <= 0.05,
                           f"worst MAD {worst:.4f} at (beta, Lambda)={worst_key} (tol 0.05)", {"mad": mads})


def criterion_6(ctx):
    """Kicked-rotor and GE Sigma11 at equal Lambda vs exact curves."""
    rows, worst = [], 0.0
    for beta in (1, 2):
        kr = pipeline.counting(pipeline.kr_band(ctx.kr_family(beta)), R_GRID, ctx.resamples, ctx.seed)
        r1, w1 = _within_sigma(kr, beta, FIG2_LAMBDAS, ctx, "kr")
        ge = pipeline.counting(ctx.ge_band(beta), R_GRID, ctx.resamples, ctx.seed)
        r2, w2 = _within_sigma(ge, beta, FIG2_LAMBDAS, ctx, "ge")
        rows += r1 + r2
        worst = max(worst, w1, w2)
    return CriterionResult(6, "universality of Sigma11", worst <= 3.0,
                           f"worst deviation {worst:.2f} SE over {len(rows)} cells (tol 3)", {"rows": rows})


def criterion_7(ctx):
    """PNV at r=100 from kicked-rotor data vs V(infinity)."""
    rows, ok = [], True
    for beta in (1, 2):
        res = pipeline.counting(pipeline.kr_band(ctx.kr_family(beta)), (100.0,), ctx.resamples, ctx.seed)
        eps = theory.CutoffEpsilon.default(beta)
        for lam in FIG3_LAMBDAS[beta]:
            v = float(res.pnv[0, _lam_index(res.lambdas, lam)])
            v_exact = pipeline.exact_pnv_infinity(beta, lam, ctx.q)
            v_compact = theory.pnv_infinity(beta, lam, eps)
            d_exact, d_compact = abs(v / v_exact - 1), abs(v / v_compact - 1)
            ok &= d_exact <= 0.10 and d_compact <= 0.15
            rows.append((beta, lam, v, v_exact, v_compact, d_exact, d_compact))
    worst_e = max(row[5] for row in rows)
    worst_c = max(row[6] for row in rows)
    return CriterionResult(7, "PNV saturation at r=100", bool(ok),
                           f"worst vs exact {100 * worst_e:.1f}% (tol 10%), vs compact {100 * worst_c:.1f}% (tol 15%)",
                           {"rows": rows})


def criterion_8(ctx):
    """Internal consistency of the exact kernels."""
    checks = {}
    for lam in (1e-4, 0.05, 0.1, 0.5):
        a = 4 * np.pi**2 * lam
        target = np.exp(-a) * np.sinh(a) / a
        below = exact.k2_exact(np.nextafter(1.0, 0.0), lam)
        at = exact.k2_exact(1.0, lam)
        above = exact.k2_exact(np.nextafter(1.0, 2.0), lam)
        checks.setdefault("k2_continuity", 0.0)
        checks["k2_continuity"] = max(checks["k2_continuity"], abs(at - target), abs(below - at), abs(above - at))
    ks = np.array([0.01, 0.02, 0.05, 0.1])
    lam0 = 1e-6
    for beta, fn in ((1, exact.k1_exact), (4, exact.k4_exact)):
        vals = np.array([fn(k, lam0, ctx.q) for k in ks])
        limit = theory.k_zero_exact(ks, beta)
        checks[f"k{beta}_limit"] = float(np.max(np.abs(vals / limit - 1)))
        checks[f"k{beta}_slope"] = float(abs(vals[0] / ks[0] / (2.0 / beta) - 1))
    kern = exact.kernel(2, 0.1, ctx.q)
    route_k = exact.r11_fourier(2.0, kern, ctx.q)
    route_r = exact.r11_exact(2.0, 0.1, 2, ctx.q)
    checks["beta2_routes"] = abs(route_k - route_r)
    tol = {"k2_continuity": 1e-14, "k1_limit": 0.03, "k4_limit": 0.03, "k1_slope": 0.03, "k4_slope": 0.03,
           "beta2_routes": 1e-3}
    ok = all(checks[key] <= tol[key] for key in tol)
    detail = ", ".join(f"{key}={checks[key]:.1e}" for key in tol)
    return CriterionResult(8, "exact-kernel internal checks", ok, detail, checks)


def criterion_9(ctx):
    """Unitarity, Kramers degeneracy, unit mean spacing, determinism."""
    checks = {}
    cfg = KickedRotorConfig(dim=ctx.kr_dim, gamma=0.1)
    checks["unitarity_G"] = unitarity_error(build_g(cfg))
    checks["unitarity_U"] = unitarity_error(build_u(cfg, cfg.k_base + 0.1).matrix)
    checks["unit_modulus_B"] = float(np.max(np.abs(np.abs(build_b(cfg, 5e5)) - 1)))

    h0 = sample_ge(4, 64, member_rng(ctx.seed, 0, 0))
    v = sample_ge(4, 64, member_rng(ctx.seed, 0, 1))
    w = np.linalg.eigvalsh(make_parametric(h0, v, 0.3).entries)
    checks["kramers"] = float(np.max(np.abs(w[0::2] - w[1::2])) / np.max(np.abs(w)))

    spacings = {}
    for beta in (1, 2):
        spacings[f"ge-b{beta}"] = ctx.ge_band(beta).mean_spacing()
        spacings[f"kr-b{beta}"] = pipeline.kr_band(ctx.kr_family(beta)).mean_spacing()
    checks["spacing"] = max(abs(s - 1) for s in spacings.values())

    checks["deterministic"] = _determinism_check(ctx)
    ok = (checks["unitarity_G"] <= 1e-10 and checks["unitarity_U"] <= 1e-10 and checks["unit_modulus_B"] <= 1e-10
          and checks["kramers"] <= 1e-10 and checks["spacing"] <= 0.02 and checks["deterministic"])
    detail = (f"unitarity {max(checks['unitarity_G'], checks['unitarity_U']):.1e}, "
              f"Kramers {checks['kramers']:.1e}, spacing dev {100 * checks['spacing']:.2f}%, "
              f"byte-identical reruns {checks['deterministic']}")
    checks.update(spacings)
    return CriterionResult(9, "structural invariants", bool(ok), detail, checks)


def _determinism_check(ctx):
    """Two uncached small runs must write byte-identical CSVs."""
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for i in range(2):
            out = Path(tmp) / f"run{i}"
            code = main(["ncov", "--preset", "smoke", "--seed", str(ctx.seed), "--out", str(out), "--no-cache",
                         "--jobs", "1"])
            if code != 0:
                return False
            outs.append(out / "ncov.csv")
        return filecmp.cmp(outs[0], outs[1], shallow=False)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9)


def run_all(ctx, numbers=None, report=print):
    results = []
    for fn in CRITERIA:
        number = int(fn.__name__.rsplit("_", 1)[1])
        if numbers and number not in numbers:
            continue
        result = fn(ctx)
        report(result.line())
        results.append(result)
    return results
