"""Command-line entry point.

    python -m parcov <mode> [--config run.json] [--seed S] [--out DIR] [--cache DIR] [--jobs N]
    python -m parcov figure fig2 --out figs/

Exit codes: 0 success, 1 validation failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np
import scipy

from . import ConfigurationError, QuadratureError, __version__, acceptance, cache, config, exact, pipeline, theory
from .counting import write_csv
from .kicked_rotor import family_form_factors

logger = logging.getLogger("parcov")

THEORY_COLUMNS = ("beta", "lambda", "k_or_r", "kind", "value", "err_estimate")
FF_COLUMNS = ("beta", "lambda", "k", "K_smoothed", "K_raw", "members")
DEFAULT_K_GRID = tuple(np.round(np.arange(0.005, 3.0, 0.01), 6))


def _fmt(x):
    return "" if x is None or (isinstance(x, float) and np.isnan(x)) else f"{x:.12g}"


def write_theory_csv(path, rows, provenance=None):
    rows = sorted(rows, key=lambda row: (row[0], row[1], row[3], row[2]))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(THEORY_COLUMNS + (("provenance",) if provenance else ()))
        for beta, lam, x, kind, value, err in rows:
            line = [beta, f"{lam:.10g}", f"{x:.10g}", kind, _fmt(value), _fmt(err)]
            writer.writerow(line + ([provenance] if provenance else []))
    return path


def write_formfactor_csv(path, curves):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FF_COLUMNS)
        for c in sorted(curves, key=lambda c: (c.beta, c.lam)):
            for k, ks, kr in zip(c.k, c.values, c.raw):
                writer.writerow([c.beta, f"{c.lam:.10g}", f"{k:.10g}", _fmt(ks), _fmt(kr), c.members])
    return path


# ---------------------------------------------------------------- modes


def _jobs(cfg):
    return cfg.workers


def _ge(cfg):
    return pipeline.ge_config(cfg.ge, cfg.seed)


def _kr(cfg):
    return pipeline.kr_config(cfg.kr)


def _band(cfg):
    if cfg.counting.source == "ge":
        return pipeline.ge_band(_ge(cfg), cfg.cache_dir, _jobs(cfg))
    return pipeline.kr_band(pipeline.kr_family(_kr(cfg), cfg.cache_dir, _jobs(cfg)))


def _counting(cfg):
    c = cfg.counting
    return pipeline.counting(_band(cfg), c.r_values, c.resamples, cfg.seed, c.stride, c.placement)


def run_ge(cfg, out):
    ge = _ge(cfg)
    family = pipeline.ge_family(ge, cfg.cache_dir, _jobs(cfg))
    path = out / "spectra_ge.prmt"
    cache.write_spectra(path, family.levels, {"kind": "ge", "beta": ge.beta, "N": ge.dim, "members": ge.members,
                                              "params": list(ge.alpha_values), "lambdas": list(ge.lambdas),
                                              "seed": ge.seed, "config_hash": cache.config_hash(ge)})
    return [path]


def run_kr(cfg, out):
    kr = _kr(cfg)
    family = pipeline.kr_family(kr, cfg.cache_dir, _jobs(cfg))
    path = out / "spectra_kr.prmt"
    records = [[float(k), dk] for k in kr.base_k_values for dk in kr.delta_k_values]
    cache.write_spectra(path, family.angles, {"kind": "kr", "beta": kr.beta, "N": kr.dim, "members": kr.members,
                                              "params": {"K_dK": records}, "lambdas": list(kr.lambdas),
                                              "seed": None, "config_hash": cache.config_hash(asdict(kr))})
    return [path]


def _theory_rows(cfg):
    t, q = cfg.theory, cfg.quadrature
    k_grid = np.array(t.k_values or DEFAULT_K_GRID, dtype=float)
    rows = []
    for beta in t.betas:
        for lam in t.lambdas:
            kern = exact.kernel(beta, lam, q)
            if "K" in t.kinds:
                rows += [(beta, lam, k, "K", float(kern(k)), None) for k in k_grid]
            if "sigma11" in t.kinds:
                vals, errs = pipeline.exact_sigma11(beta, lam, t.r_values, q, cfg.cache_dir)
                rows += [(beta, lam, r, "sigma11", v, e) for r, v, e in zip(t.r_values, vals, errs)]
            if "R11" in t.kinds and lam > 0:
                rows += [(beta, lam, r, "R11", exact.r11_fourier(r, kern, q), None) for r in t.r_values]
            if "pnv" in t.kinds and lam > 0:
                rows.append((beta, lam, np.inf, "pnv", pipeline.exact_pnv_infinity(beta, lam, q), None))
    return rows


def run_theory_exact(cfg, out):
    return [write_theory_csv(out / "theory_exact.csv", _theory_rows(cfg))]


def _epsilon(cfg, beta):
    value = cfg.theory.epsilon.get(str(beta), cfg.theory.epsilon.get(beta))
    return theory.CutoffEpsilon(beta, value) if value is not None else theory.CutoffEpsilon.default(beta)


def run_theory_compact(cfg, out):
    rows = []
    for beta in cfg.theory.betas:
        eps = _epsilon(cfg, beta)
        for lam in cfg.theory.lambdas:
            for r in cfg.theory.r_values:
                rows.append((beta, lam, r, "sigma11", theory.sigma11_compact(r, beta, lam, eps), None))
    return [write_theory_csv(out / "theory_compact.csv", rows, provenance="compact")]


def run_fit_epsilon(cfg, out):
    path = out / "epsilon.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("beta", "epsilon", "reference"))
        for beta in cfg.theory.betas:
            eps = pipeline.fitted_epsilon(beta, cfg.quadrature, cfg.cache_dir)
            writer.writerow((beta, f"{eps.value:.6g}", theory.EPSILON_DEFAULTS[beta]))
    return [path]


def run_ncov(cfg, out):
    res = _counting(cfg)
    return [write_csv(out / "ncov.csv", [res.table("sigma11"), res.table("sigma2")])]


def run_pnv(cfg, out):
    res = _counting(cfg)
    return [write_csv(out / "pnv.csv", [res.table("pnv")])]


def run_formfactor(cfg, out):
    family = pipeline.kr_family(_kr(cfg), cfg.cache_dir, _jobs(cfg))
    return [write_formfactor_csv(out / "formfactor.csv", family_form_factors(family))]


def run_validate(cfg, out):
    ctx = acceptance.Context(cache_dir=cfg.cache_dir, jobs=_jobs(cfg), seed=cfg.seed, q=cfg.quadrature)
    lines = []

    def report(line):
        print(line, flush=True)
        lines.append(line)

    results = acceptance.run_all(ctx, report=report)
    path = out / "validate.txt"
    path.write_text("\n".join(lines) + "\n")
    return [path], all(r.passed for r in results)


def run_figure(cfg, out):
    from . import figures

    return figures.emit(cfg.figure, cfg, out)


RUNNERS = {
    "ge": run_ge, "kr": run_kr, "theory-exact": run_theory_exact, "theory-compact": run_theory_compact,
    "fit-epsilon": run_fit_epsilon, "ncov": run_ncov, "pnv": run_pnv, "formfactor": run_formfactor,
    "validate": run_validate, "figure": run_figure,
}


def _result_hash(cfg):
    # where results go and how many workers produce them does not change them
    data = cache._jsonable(cfg)
    for key in ("output_dir", "cache_dir", "jobs"):
        data.pop(key, None)
    return cache.config_hash(data)


def run(cfg):
    """Execute one mode; returns ``(manifest, ok)``."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    produced = RUNNERS[cfg.mode](cfg, out)
    ok = True
    if isinstance(produced, tuple):
        produced, ok = produced
    manifest = {
        "mode": cfg.mode,
        "figure": cfg.figure,
        "config_hash": _result_hash(cfg),
        "config": json.loads(json.dumps(cache._jsonable(cfg))),
        "seed": cfg.seed,
        "versions": {"parcov": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "wall_time_s": round(time.perf_counter() - start, 3),
        "outputs": [str(Path(p).name) for p in produced],
        "passed": ok,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest, ok


def build_parser():
    p = argparse.ArgumentParser(prog="parcov", description="Parametric number covariance of chaotic spectra.")
    p.add_argument("mode", choices=config.MODES)
    p.add_argument("figure", nargs="?", choices=config.FIGURES, help="figure id for mode=figure")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--preset", choices=sorted(config.PRESETS), help="named scale preset")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--cache", dest="cache_dir")
    p.add_argument("--no-cache", action="store_true", help="neither read nor write the spectrum cache")
    p.add_argument("--jobs", type=int, help="worker processes (0 = all cores)")
    p.add_argument("--beta", type=int, help="shorthand for ge.beta and theory.betas")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _overrides(args):
    data = {"mode": args.mode, "figure": args.figure, "seed": args.seed, "output_dir": args.output_dir,
            "cache_dir": args.cache_dir, "jobs": args.jobs}
    return data


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg_data = {}
        if args.config:
            cfg_data = json.loads(Path(args.config).read_text())
        if args.preset:
            cfg_data["preset"] = args.preset
        cfg_data.update({k: v for k, v in _overrides(args).items() if v is not None})
        if args.no_cache:
            cfg_data["cache_dir"] = None
        if args.beta is not None:
            cfg_data.setdefault("ge", {})["beta"] = args.beta
            cfg_data.setdefault("theory", {})["betas"] = [args.beta]
        cfg = config.from_dict(cfg_data)
    except (ConfigurationError, OSError, json.JSONDecodeError) as exc:
        print(f"parcov: error: {exc}", file=sys.stderr)
        return 2
    try:
        _, ok = run(cfg)
    except ConfigurationError as exc:
        print(f"parcov: error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, FileNotFoundError) as exc:
        print(f"parcov: {exc}", file=sys.stderr)
        return 1
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
