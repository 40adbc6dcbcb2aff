"""Run configuration: JSON file, presets and flag overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace

from . import ConfigurationError, check_beta
from .exact import QuadratureSettings

MODES = ("ge", "kr", "theory-exact", "theory-compact", "fit-epsilon", "ncov", "pnv", "formfactor", "validate", "figure")
FIGURES = ("fig1", "fig2", "fig3")


@dataclass(frozen=True)
class GESection:
    beta: int = 2
    dim: int = 512
    members: int = 200
    lambdas: tuple = (0.0, 0.05, 0.1, 0.2)
    middle_fraction: float = 0.25


@dataclass(frozen=True)
class KRSection:
    gamma: float = 0.0
    dim: int = 1025
    members: int = 50
    lambdas: tuple = (0.0, 0.025, 0.05, 0.075)
    k_base: float = 10000.0
    k_member_step: float = 10000.0
    smoothing_halfwidth: int = 5
    smoothing_order: str = "complex"
    eig_method: str = "cayley"


@dataclass(frozen=True)
class TheorySection:
    betas: tuple = (1, 2, 4)
    lambdas: tuple = (0.0, 0.05, 0.1, 0.2)
    r_values: tuple = (1.0, 5.0, 10.0)
    k_values: tuple = ()
    epsilon: dict = field(default_factory=dict)
    kinds: tuple = ("K", "sigma11")


@dataclass(frozen=True)
class CountingSection:
    source: str = "ge"
    r_values: tuple = (1.0, 5.0, 10.0)
    stride: float = 1.0
    placement: str = "sliding"
    resamples: int = 1000


@dataclass(frozen=True)
class RunConfig:
    mode: str = "validate"
    figure: str | None = None
    seed: int = 0
    output_dir: str = "out"
    cache_dir: str | None = ".cache"
    jobs: int = 0
    ge: GESection = GESection()
    kr: KRSection = KRSection()
    theory: TheorySection = TheorySection()
    counting: CountingSection = CountingSection()
    quadrature: QuadratureSettings = QuadratureSettings()

    @property
    def workers(self):
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)


SECTIONS = {"ge": GESection, "kr": KRSection, "theory": TheorySection, "counting": CountingSection,
            "quadrature": QuadratureSettings}

PRESETS = {
    "desk": {},
    # 1024-dim GE spectra, 256 middle levels
    "full": {"ge": {"dim": 1024, "members": 200}},
    "smoke": {"ge": {"dim": 128, "members": 16}, "kr": {"dim": 129, "members": 8}},
}


def _coerce(path, cls, value):
    if not isinstance(value, dict):
        raise ConfigurationError(f"{path}: expected an object")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, val in value.items():
        if key not in known:
            raise ConfigurationError(f"{path}.{key}: unknown field")
        kwargs[key] = tuple(val) if isinstance(val, list) else val
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


def _merge(base, extra):
    out = dict(base)
    for key, val in extra.items():
        out[key] = _merge(out.get(key, {}), val) if isinstance(val, dict) and key in SECTIONS else val
    return out


def from_dict(data):
    """Build and validate a RunConfig; errors name the offending field path."""
    data = dict(data)
    preset = data.pop("preset", "desk")
    if preset not in PRESETS:
        raise ConfigurationError(f"preset: unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    data = _merge(PRESETS[preset], data)
    kwargs = {}
    top = {f.name for f in fields(RunConfig)}
    for key, val in data.items():
        if key not in top:
            raise ConfigurationError(f"{key}: unknown field")
        kwargs[key] = _coerce(key, SECTIONS[key], val) if key in SECTIONS else val
    cfg = RunConfig(**kwargs)
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg.mode not in MODES:
        raise ConfigurationError(f"mode: must be one of {MODES}")
    if cfg.mode == "figure" and cfg.figure not in FIGURES:
        raise ConfigurationError(f"figure: must be one of {FIGURES}")
    if not 0 <= int(cfg.seed) < 2**64:
        raise ConfigurationError("seed: must be an unsigned 64-bit integer")
    try:
        check_beta(cfg.ge.beta)
        for b in cfg.theory.betas:
            check_beta(b)
    except ConfigurationError as exc:
        raise ConfigurationError(f"beta: {exc}") from exc
    if cfg.counting.source not in ("ge", "kr"):
        raise ConfigurationError("counting.source: must be 'ge' or 'kr'")
    for name, lams in (("ge.lambdas", cfg.ge.lambdas), ("kr.lambdas", cfg.kr.lambdas)):
        if not lams or lams[0] != 0 or any(lam < 0 for lam in lams):
            raise ConfigurationError(f"{name}: must be non-negative and start with 0")
    for name, value, low in (("ge.dim", cfg.ge.dim, 4), ("ge.members", cfg.ge.members, 1),
                             ("kr.dim", cfg.kr.dim, 3), ("kr.members", cfg.kr.members, 1)):
        if int(value) < low:
            raise ConfigurationError(f"{name}: must be >= {low}")
    if cfg.kr.dim % 2 == 0:
        raise ConfigurationError("kr.dim: must be odd")
    if any(lam < 0 for lam in cfg.theory.lambdas):
        raise ConfigurationError("theory.lambdas: must be non-negative")
    if cfg.jobs < 0:
        raise ConfigurationError("jobs: must be >= 0 (0 = all cores)")
    return cfg


def load(path=None, overrides=None):
    """Read a JSON config (optional) and apply flag overrides, which win."""
    data = {}
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"--config: {exc}") from exc
    for key, val in (overrides or {}).items():
        if val is not None:
            data[key] = val
    return from_dict(data)


def with_updates(cfg, **changes):
    return replace(cfg, **changes)
