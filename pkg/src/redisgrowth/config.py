"""Configuration defaults, TOML loading and dotted-path overrides."""

from __future__ import annotations

import copy
import os
import sys
from fractions import Fraction
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .econ import SCHEMES, InvalidInput
from .eta import PRESETS, EtaSpec
from .sweep import SweepGrid, grid_values

SEED_ENV = "REDISGROWTH_SEED"

DEFAULTS: dict[str, Any] = {
    "seed": 20190417,
    "threads": 1,
    "output": {"dir": "out"},
    "eta": {"preset": "intermediate", "mean": 0.0, "geomean": 0.0, "scale": 1.0},
    "demo": {
        "incomes": [100.0, 300.0, 600.0, 1000.0, 1500.0, 2100.0],
        "a": "1/3",
        "b": 0.25,
    },
    "trajectories": {
        "N": 10,
        "T": 500,
        "a": 0.3,
        "b": 0.2,
        "schemes": list(SCHEMES),
    },
    "sweep": {
        "a_start": 0.0,
        "a_stop": 1.0,
        "a_step": 0.02,
        "b_start": 0.0,
        "b_stop": 0.8,
        "b_step": 0.02,
        "schemes": list(SCHEMES),
        "presets": list(PRESETS),
        "N": [10, 100],
        "T": 500,
        "samples": 100,
        "window": 5,
    },
    "stats": {"t": [1, 500]},
}


class ConfigError(InvalidInput):
    pass


def number(v) -> float:
    """Accept floats, ints and fraction strings such as "1/3"."""
    if isinstance(v, bool):
        raise ConfigError(f"expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return float(v)
    try:
        return float(Fraction(str(v).strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"expected a number, got {v!r}") from None


def leaves(tree: dict, prefix: str = ""):
    for k, v in tree.items():
        path = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from leaves(v, path + ".")
        else:
            yield path, v


def _set(tree: dict, path: str, value):
    parts = path.split(".")
    node = tree
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{path}: {p} is not a table")
    node[parts[-1]] = value


def _get(tree: dict, path: str):
    node = tree
    for p in path.split("."):
        node = node[p]
    return node


def _merge(base: dict, over: dict, prefix: str = ""):
    for k, v in over.items():
        path = f"{prefix}{k}"
        if k not in base:
            raise ConfigError(f"unknown config key {path!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"{path} must be a table")
            _merge(base[k], v, path + ".")
        else:
            base[k] = v


def parse_flag(path: str, text: str):
    """Convert a command-line string to the type of the default at ``path``."""
    default = _get(DEFAULTS, path)
    if isinstance(default, list):
        items = [x.strip() for x in text.split(",") if x.strip()]
        if default and isinstance(default[0], int) and not isinstance(default[0], bool):
            return [int(x) for x in items]
        if default and isinstance(default[0], float):
            return [number(x) for x in items]
        return items
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return number(text)
    return text


def load(path: str | None = None, overrides: dict[str, Any] | None = None,
         environ=os.environ) -> dict:
    """Resolve configuration: flag > seed env var > config file > defaults."""
    cfg = copy.deepcopy(DEFAULTS)
    if path:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from None
        _merge(cfg, data)
    if environ.get(SEED_ENV):
        try:
            cfg["seed"] = int(environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    for k, v in (overrides or {}).items():
        _set(cfg, k, v)
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    return cfg


def spec_from(name_or_pair: str) -> EtaSpec:
    """A preset name, or "mean:geomean[:scale]"."""
    if name_or_pair in PRESETS:
        return PRESETS[name_or_pair]
    parts = name_or_pair.split(":")
    if len(parts) not in (2, 3):
        raise ConfigError(f"unknown eta preset {name_or_pair!r}")
    return EtaSpec(*(number(p) for p in parts))


def eta_spec(cfg: dict) -> EtaSpec:
    e = cfg["eta"]
    if number(e["mean"]) > 0 or number(e["geomean"]) > 0:
        return EtaSpec(number(e["mean"]), number(e["geomean"]), number(e["scale"]))
    base = spec_from(e["preset"])
    return EtaSpec(base.mean, base.geomean, number(e["scale"]))


def sweep_grid(cfg: dict) -> SweepGrid:
    s = cfg["sweep"]
    schemes = tuple(s["schemes"])
    for x in schemes:
        if x not in SCHEMES:
            raise ConfigError(f"unknown scheme {x!r}")
    return SweepGrid(
        a_values=grid_values(number(s["a_start"]), number(s["a_stop"]), number(s["a_step"])),
        b_values=grid_values(number(s["b_start"]), number(s["b_stop"]), number(s["b_step"])),
        schemes=schemes,
        specs=tuple(spec_from(p) for p in s["presets"]),
        N_values=tuple(int(n) for n in s["N"]),
        T=int(s["T"]),
        samples=int(s["samples"]),
        base_seed=int(cfg["seed"]),
    )


def to_toml(cfg: dict) -> str:
    """Minimal TOML writer for resolved configs (scalars, flat lists, tables)."""
    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (int, float)):
            return repr(v)
        if isinstance(v, list):
            return "[" + ", ".join(fmt(x) for x in v) + "]"
        return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'

    lines = [f"{k} = {fmt(v)}" for k, v in cfg.items() if not isinstance(v, dict)]
    for k, v in cfg.items():
        if isinstance(v, dict):
            lines.append(f"\n[{k}]")
            lines.extend(f"{kk} = {fmt(vv)}" for kk, vv in v.items())
    return "\n".join(lines) + "\n"
