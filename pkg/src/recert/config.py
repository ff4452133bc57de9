"""Strict parser for flat ``key = value`` experiment files with ``[section]`` headers.

Example::

    [experiment]
    kind = theorem-mc
    p = 128
    n = 2048
    trials = 500
    points = 1000

    [covariance]
    kind = identity

Keys before the first header belong to ``[experiment]``. ``#`` and ``;``
start comment lines. Unknown sections or keys, duplicates, malformed values
and missing required keys raise :class:`ConfigError`; every message names
the key and its line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from .bounds import REFERENCE_PARAMS, BoundParams
from .core import InvalidInputError

KINDS = ("audit", "bounds", "certify", "verify-lemmas", "theorem-mc", "solve")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _int(v: str) -> int:
    return int(v)


def _float(v: str) -> float:
    x = float(v)
    if math.isnan(x):
        raise ValueError("nan is not allowed")
    return x


def _bool(v: str) -> bool:
    low = v.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _ints(v: str) -> tuple[int, ...]:
    v = v.strip()
    if not v or v == "-":
        return ()
    return tuple(int(x) for x in v.split(","))


def _floats(v: str) -> tuple[float, ...]:
    return tuple(_float(x) for x in v.split(","))


def _collection(v: str) -> tuple[tuple[int, ...], ...]:
    """``1,2 | 2 | -`` lists one index set per column, ``-`` for the empty set."""
    return tuple(_ints(part) for part in v.split("|"))


def _choice(*options: str) -> Callable[[str], str]:
    def parse(v: str) -> str:
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return v
    return parse


def _str(v: str) -> str:
    return v


def _lam(v: str) -> float | str:
    return "default" if v == "default" else _float(v)


SCHEMA: dict[str, dict[str, Callable[[str], Any]]] = {
    "experiment": {"kind": _choice(*KINDS), "seed": _int, "p": _int, "n": _int,
                   "trials": _int, "points": _int, "refine_iters": _int, "workers": _int,
                   "out": _str, "mode": _choice("special", "general")},
    "covariance": {"kind": _choice("identity", "diagonal", "ar1", "dense"), "diag": _floats,
                   "phi": _float, "file": _str},
    "contamination": {"outliers": _ints, "deterministic": _choice("none", "constant_row", "explicit"),
                      "mu": _floats, "file": _str,
                      "random": _choice("none", "identity", "diagonal", "ar1", "dense"),
                      "random_diag": _floats, "random_phi": _float, "random_file": _str},
    "cone": {"type": _choice("vector", "matrix"), "S": _ints, "O": _ints, "J": _collection,
             "c": _float, "gamma": _float},
    "bounds": {"preset": _choice("paper", "custom"), "epsilon": _float, "alpha": _float,
               "beta": _float, "sigma": _float, "tau": _float, "sigma_max_a": _float},
    "corollary": {"s": _int, "o": _int, "c": _float, "gamma": _float, "c0": _float},
    "lemmas": {"which": _choice("aux1", "aux2", "both", "splitting"), "t": _float,
               "r1": _float, "r2": _float},
    "solver": {"problem": _choice("lasso", "multitask"), "lambda_b": _lam, "lambda_theta": _lam,
               "max_iters": _int, "tol": _float, "design": _str, "response": _str,
               "simulate": _bool, "s_star": _int, "o_star": _int, "magnitude": _float,
               "noise_sd": _float, "c": _float},
}


@dataclass
class Entry:
    value: Any
    line: int


@dataclass
class ExperimentConfig:
    """Parsed configuration; ``get`` returns typed values with defaults."""

    sections: dict[str, dict[str, Entry]] = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd)

    def has(self, section: str, key: str) -> bool:
        return key in self.sections.get(section, {})

    def get(self, section: str, key: str, default: Any = None) -> Any:
        e = self.sections.get(section, {}).get(key)
        return default if e is None else e.value

    def line(self, section: str, key: str) -> int:
        e = self.sections.get(section, {}).get(key)
        return 0 if e is None else e.line

    def require(self, section: str, key: str) -> Any:
        if not self.has(section, key):
            raise ConfigError(f"[{section}] missing required key '{key}'")
        return self.get(section, key)

    def set(self, section: str, key: str, value: Any) -> None:
        self.sections.setdefault(section, {})[key] = Entry(value, 0)

    def error(self, section: str, key: str, msg: str) -> ConfigError:
        return ConfigError(f"line {self.line(section, key)}: key '{key}' in [{section}]: {msg}")

    @property
    def kind(self) -> Optional[str]:
        return self.get("experiment", "kind")

    def path(self, section: str, key: str) -> Path:
        p = Path(self.require(section, key))
        return p if p.is_absolute() else self.base_dir / p

    def echo(self) -> list[str]:
        out = []
        for sec in SCHEMA:
            if sec not in self.sections:
                continue
            for key, e in self.sections[sec].items():
                out.append(f"{sec}.{key} = {_render(e.value)}")
        return out


def _render(v: Any) -> str:
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return " | ".join(",".join(map(str, part)) or "-" for part in v)
        return ",".join(map(str, v))
    return str(v)


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    """Parse and validate experiment text."""
    cfg = ExperimentConfig(base_dir=base_dir or Path.cwd())
    section = "experiment"
    seen_sections: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            if section in seen_sections:
                raise ConfigError(f"line {lineno}: duplicate section [{section}] "
                                  f"(first on line {seen_sections[section]})")
            seen_sections[section] = lineno
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(f"line {lineno}: unknown key '{key}' in [{section}]")
        bucket = cfg.sections.setdefault(section, {})
        if key in bucket:
            raise ConfigError(f"line {lineno}: duplicate key '{key}' in [{section}] "
                              f"(first on line {bucket[key].line})")
        try:
            parsed = SCHEMA[section][key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: key '{key}' in [{section}]: invalid value {value!r} ({exc})")
        bucket[key] = Entry(parsed, lineno)
    validate(cfg)
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_config(text, base_dir=path.parent)


_POSITIVE = {("experiment", "p"), ("experiment", "n"), ("experiment", "trials"),
             ("experiment", "points"), ("experiment", "workers"), ("solver", "max_iters")}
_NONNEG = {("experiment", "seed"), ("experiment", "refine_iters"), ("corollary", "s"),
           ("corollary", "o"), ("solver", "s_star"), ("solver", "o_star"),
           ("solver", "noise_sd"), ("bounds", "sigma_max_a")}


def validate(cfg: ExperimentConfig) -> None:
    """Range checks that do not depend on the experiment kind."""
    for sec, key in _POSITIVE:
        if cfg.has(sec, key) and cfg.get(sec, key) < 1:
            raise cfg.error(sec, key, "must be >= 1")
    for sec, key in _NONNEG:
        if cfg.has(sec, key) and cfg.get(sec, key) < 0:
            raise cfg.error(sec, key, "must be >= 0")
    for key in ("c", "gamma"):
        if cfg.has("cone", key) and not cfg.get("cone", key) > 0:
            raise cfg.error("cone", key, "must be > 0")
    if cfg.has("corollary", "c0") and not cfg.get("corollary", "c0") > 0:
        raise cfg.error("corollary", "c0", "must be > 0")
    if cfg.has("covariance", "phi") and not -1 < cfg.get("covariance", "phi") < 1:
        raise cfg.error("covariance", "phi", "must lie in (-1, 1)")
    if cfg.has("lemmas", "t") and not cfg.get("lemmas", "t") > 0:
        raise cfg.error("lemmas", "t", "must be > 0")
    for key in ("r1", "r2"):
        if cfg.has("lemmas", key) and cfg.get("lemmas", key) < 0:
            raise cfg.error("lemmas", key, "must be >= 0")
    if cfg.has("solver", "tol") and not cfg.get("solver", "tol") > 0:
        raise cfg.error("solver", "tol", "must be > 0")
    for key in ("lambda_b", "lambda_theta"):
        v = cfg.get("solver", key)
        if isinstance(v, float) and v < 0:
            raise cfg.error("solver", key, "must be >= 0")
    bound_params(cfg)


_PARAM_RANGES = {"epsilon": "must lie in (0, 3/4)", "alpha": "must be > 0", "beta": "must be > 0",
                 "sigma": "must be > 0", "tau": "must be > 0"}


def bound_params(cfg: ExperimentConfig) -> BoundParams:
    """``BoundParams`` from ``[bounds]``; the reference preset unless ``preset = custom``."""
    preset = cfg.get("bounds", "preset", "paper")
    keys = list(_PARAM_RANGES)
    given = [k for k in keys if cfg.has("bounds", k)]
    if preset == "paper":
        if given:
            raise cfg.error("bounds", given[0], "only allowed with preset = custom")
        return REFERENCE_PARAMS
    values = {}
    for k in keys:
        if not cfg.has("bounds", k):
            raise ConfigError(f"[bounds] missing required key '{k}' for preset = custom")
        values[k] = cfg.get("bounds", k)
    for k in keys:
        v = values[k]
        ok = 0 < v < 0.75 if k == "epsilon" else (v > 0 and math.isfinite(v))
        if not ok:
            raise cfg.error("bounds", k, _PARAM_RANGES[k])
    try:
        return BoundParams(**values)
    except InvalidInputError as exc:
        raise ConfigError(str(exc))
