"""Experiment configuration: a single YAML file turned into toolkit objects."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import growth as gr
from . import testfunctions as tf
from .defaults import DEFAULTS
from .grid import GridFunction, load_grid, make_ball_family


class ConfigError(ValueError):
    pass


def conjugate_exponent(p: float) -> float:
    """p' with 1/p + 1/p' = 1."""
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


@dataclass
class ExperimentConfig:
    raw: dict
    base_dir: Path
    refine: int = 1
    seed: int = 0
    expect: dict = field(default_factory=dict)

    def get(self, key: str):
        """Dotted lookup in the config, falling back to the defaults table."""
        node = self.raw
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                if key in DEFAULTS:
                    return DEFAULTS[key]
                raise ConfigError(f"missing config key {key!r}")
            node = node[part]
        return node

    def has(self, key: str) -> bool:
        node = self.raw
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return False
            node = node[part]
        return True

    # -- scalar parameters

    @property
    def p(self) -> float:
        p = float(self.raw.get("p", 2.0))
        if not 1 <= p < math.inf:
            raise ConfigError("p must lie in [1, inf)")
        return p

    @property
    def p_conj(self) -> float:
        return conjugate_exponent(self.p)

    @property
    def q(self) -> float:
        q = self.raw.get("q", DEFAULTS["blocks.q"])
        q = math.inf if str(q).lower() in ("inf", "infinity") else float(q)
        if q <= 1:
            raise ConfigError("q must lie in (1, inf]")
        return q

    # -- grid

    @property
    def lower(self) -> tuple:
        return tuple(float(v) for v in np.atleast_1d(self.get("grid.lower")))

    @property
    def upper(self) -> tuple:
        return tuple(float(v) for v in np.atleast_1d(self.get("grid.upper")))

    @property
    def d(self) -> int:
        return len(self.lower)

    @property
    def h(self) -> float:
        return float(self.get("grid.h")) / self.refine

    def eval_box(self):
        if self.has("eval_box"):
            return (tuple(float(v) for v in np.atleast_1d(self.get("eval_box.lower"))),
                    tuple(float(v) for v in np.atleast_1d(self.get("eval_box.upper"))))
        return self.lower, self.upper

    def family(self, f: GridFunction):
        diam = math.sqrt(sum((u - l) ** 2 for l, u in zip(f.lower, f.upper)))
        r_min = float(self.raw.get("family", {}).get("r_min", f.h))
        r_max = float(self.raw.get("family", {}).get("r_max", diam))
        return make_ball_family(f.lower, f.upper, f.h, max(r_min, f.h), r_max,
                                float(self.get("family.rho")), "proportional", float(self.get("family.kappa")))

    # -- objects

    def function_spec(self, key: str = "function"):
        spec = self.raw.get(key)
        if spec is None:
            raise ConfigError(f"missing {key!r} section")
        return parse_function(spec, self.d, self.base_dir)

    def function(self, key: str = "function") -> GridFunction:
        spec = self.function_spec(key)
        if isinstance(spec, GridFunction):
            return spec
        return spec.sample(self.lower, self.upper, self.h, self.p)

    def growth(self, key: str = "growth") -> gr.GrowthFunction:
        spec = self.raw.get(key)
        if spec is None:
            raise ConfigError(f"missing {key!r} section")
        return parse_growth(spec, self.d)

    def battery(self, n: int | None = None):
        bat = self.raw.get("battery", {})
        n = int(bat.get("size", DEFAULTS["czo.battery_size"])) if n is None else n
        rng = np.random.default_rng(self.seed)
        return tf.smooth_battery(n, rng, self.d, float(bat.get("amplitude", 1.0)),
                                 float(bat.get("spread", 1.0)), tuple(bat.get("radius_range", (0.2, 1.0))))

    def x_samples(self):
        return gr.default_x_samples(self.lower, self.upper, int(self.get("growth.x_count")))

    def r_samples(self):
        return np.logspace(math.log10(float(self.get("growth.r_min"))), math.log10(float(self.get("growth.r_max"))),
                           int(self.get("growth.r_count")))


def _pt(v, d):
    if v is None:
        return tuple([0.0] * d)
    return tuple(float(c) for c in np.atleast_1d(v))


def parse_function(spec: dict, d: int, base_dir: Path):
    kind = spec.get("type")
    try:
        if kind == "gaussian":
            return tf.Gaussian(float(spec.get("amplitude", 1.0)), float(spec.get("width", 1.0)), _pt(spec.get("center"), d))
        if kind == "bump":
            return tf.Bump(_pt(spec.get("center"), d), float(spec.get("radius", 1.0)), float(spec.get("amplitude", 1.0)))
        if kind == "indicator":
            return tf.Indicator(_pt(spec.get("center"), d), float(spec.get("radius", 1.0)), float(spec.get("amplitude", 1.0)))
        if kind == "power":
            return tf.PowerSingularity(float(spec["exponent"]), float(spec.get("radius", 1.0)), _pt(spec.get("center"), d))
        if kind == "expression":
            return tf.Expression(str(spec["source"]))
        if kind == "file":
            path = Path(spec["path"])
            path = path if path.is_absolute() else base_dir / path
            if not path.exists():
                raise ConfigError(f"grid file not found: {path}")
            return load_grid(path)
    except KeyError as exc:
        raise ConfigError(f"function section misses {exc}") from exc
    raise ConfigError(f"unknown function type {kind!r}")


def parse_growth(spec: dict, d: int) -> gr.GrowthFunction:
    fam = spec.get("family")
    try:
        if fam == "power":
            phi = gr.power_law(float(spec["lam"]), d)
        elif fam == "lp":
            phi = gr.lp_growth(d, float(spec["p"]))
        elif fam == "constant":
            phi = gr.constant(float(spec.get("c", 1.0)), d)
        elif fam == "variable":
            lam = spec["lam"]
            if isinstance(lam, dict):
                lam = (lam["x"], lam["values"])
            phi = gr.variable_exponent(lam, float(spec["lam_star"]), d)
        else:
            raise ConfigError(f"unknown growth family {fam!r}")
    except KeyError as exc:
        raise ConfigError(f"growth section misses {exc}") from exc
    derived = spec.get("derived")
    if derived:
        d1, d2 = gr.derive_phi12(phi, float(derived["eps"]))
        phi = d1 if derived.get("kind", "derived1") == "derived1" else d2
    return phi


def load_config(path, refine: int = 1, seed: int = 0) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    if refine < 1:
        raise ConfigError("--refine must be a positive integer")
    cfg = ExperimentConfig(raw, path.parent, refine, seed, dict(raw.get("expect", {}) or {}))
    # validate eagerly so that config errors surface before any computation
    cfg.p
    cfg.lower, cfg.upper, cfg.h
    if len(cfg.lower) != len(cfg.upper) or cfg.d not in (1, 2):
        raise ConfigError("grid box must be 1- or 2-dimensional")
    return cfg
