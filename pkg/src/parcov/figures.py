"""Plot-ready CSV bundles for the three figures."""

from __future__ import annotations

import numpy as np

from . import exact, pipeline, theory
from .config import GESection, KRSection
from .counting import write_csv
from .kicked_rotor import family_form_factors

FIG1_LAMBDAS = (0.0, 0.025, 0.05, 0.075)
FIG2_R = (1.0, 5.0, 10.0)
FIG2_EXACT_LAMBDAS = tuple(np.round(np.arange(0.0, 0.2001, 0.025), 6))
FIG2_DATA_LAMBDAS = pipeline.GE_LAMBDAS
FIG3_LAMBDAS = {1: (0.5, 1.0, 1.5), 2: (0.2, 0.5, 1.0)}
FIG3_R = tuple(float(r) for r in range(1, 101))


def _kr_family(cfg, beta):
    section = KRSection(**{**cfg.kr.__dict__, "gamma": pipeline.KR_GAMMA[beta],
                           "lambdas": pipeline.KR_LAMBDAS[beta]})
    return pipeline.kr_family(pipeline.kr_config(section), cfg.cache_dir, cfg.workers)


def _ge_band(cfg, beta):
    section = GESection(beta=beta, dim=cfg.ge.dim, members=cfg.ge.members, lambdas=FIG2_DATA_LAMBDAS,
                        middle_fraction=cfg.ge.middle_fraction)
    return pipeline.ge_band(pipeline.ge_config(section, cfg.seed), cfg.cache_dir, cfg.workers)


def fig1(cfg, out):
    """Cross-form factor: kicked-rotor data and exact curves."""
    from .cli import write_formfactor_csv, write_theory_csv

    curves, rows = [], []
    for beta in (1, 2):
        family = _kr_family(cfg, beta)
        curves += [c for c in family_form_factors(family) if any(np.isclose(c.lam, l) for l in FIG1_LAMBDAS)]
        k = np.arange(1, 3 * family.config.dim + 1) / family.config.dim
        for lam in FIG1_LAMBDAS:
            kern = exact.kernel(beta, lam, cfg.quadrature)
            rows += [(beta, lam, kk, "K", float(v), None) for kk, v in zip(k, kern(k))]
    return [write_formfactor_csv(out / "fig1_data.csv", curves),
            write_theory_csv(out / "fig1_exact.csv", rows, provenance="exact")]


def fig2(cfg, out):
    """Number covariance vs Lambda at r = 1, 5, 10: exact, compact, GE and kicked-rotor data."""
    from .cli import write_theory_csv

    exact_rows, compact_rows = [], []
    for beta in (1, 2, 4):
        eps = theory.CutoffEpsilon.default(beta)
        for lam in FIG2_EXACT_LAMBDAS:
            vals, errs = pipeline.exact_sigma11(beta, lam, FIG2_R, cfg.quadrature, cfg.cache_dir)
            exact_rows += [(beta, lam, r, "sigma11", v, e) for r, v, e in zip(FIG2_R, vals, errs)]
            compact_rows += [(beta, lam, r, "sigma11", theory.sigma11_compact(r, beta, lam, eps), None)
                             for r in FIG2_R]
    ge_tables = []
    for beta in (1, 2, 4):
        res = pipeline.counting(_ge_band(cfg, beta), FIG2_R, cfg.counting.resamples, cfg.seed)
        ge_tables.append(res.table("sigma11"))
    kr_tables = []
    for beta in (1, 2):
        res = pipeline.counting(pipeline.kr_band(_kr_family(cfg, beta)), FIG2_R, cfg.counting.resamples, cfg.seed)
        table = res.table("sigma11")
        table.rows = [row for row in table.rows if row.lam <= 0.2 + 1e-9]
        kr_tables.append(table)
    return [write_theory_csv(out / "fig2_exact.csv", exact_rows, provenance="exact"),
            write_theory_csv(out / "fig2_compact.csv", compact_rows, provenance="compact"),
            write_csv(out / "fig2_ge.csv", ge_tables, provenance="ge"),
            write_csv(out / "fig2_kr.csv", kr_tables, provenance="kr")]


def fig3(cfg, out):
    """PNV vs r up to 100 at the caption's Lambda values."""
    from .cli import write_theory_csv

    rows, compact_rows, tables = [], [], []
    r = np.array(FIG3_R)
    for beta in (1, 2):
        eps = theory.CutoffEpsilon.default(beta)
        sigma2, err2 = pipeline.exact_sigma11(beta, 0.0, r, cfg.quadrature, cfg.cache_dir)
        for lam in FIG3_LAMBDAS[beta]:
            s11, err11 = pipeline.exact_sigma11(beta, lam, r, cfg.quadrature, cfg.cache_dir)
            v = 2.0 * (sigma2 - s11)
            rows += [(beta, lam, rr, "pnv", vv, 2 * (e2 + e1)) for rr, vv, e2, e1 in zip(r, v, err2, err11)]
            rows.append((beta, lam, np.inf, "pnv", pipeline.exact_pnv_infinity(beta, lam, cfg.quadrature), None))
            vc = 2.0 * (theory.sigma11_compact(r, beta, 0.0, eps) - theory.sigma11_compact(r, beta, lam, eps))
            compact_rows += [(beta, lam, rr, "pnv", vv, None) for rr, vv in zip(r, vc)]
            compact_rows.append((beta, lam, np.inf, "pnv", theory.pnv_infinity(beta, lam, eps), None))
        res = pipeline.counting(pipeline.kr_band(_kr_family(cfg, beta)), FIG3_R, cfg.counting.resamples, cfg.seed)
        table = res.table("pnv")
        table.rows = [row for row in table.rows if any(np.isclose(row.lam, l) for l in FIG3_LAMBDAS[beta])]
        tables.append(table)
    return [write_theory_csv(out / "fig3_exact.csv", rows, provenance="exact"),
            write_theory_csv(out / "fig3_compact.csv", compact_rows, provenance="compact"),
            write_csv(out / "fig3_kr.csv", tables, provenance="kr")]


FIGURES = {"fig1": fig1, "fig2": fig2, "fig3": fig3}


def emit(name, cfg, out):
    """Write the CSV bundle for one figure; returns the written paths."""
    return FIGURES[name](cfg, out)
