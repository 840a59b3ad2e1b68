"""Run configuration: a versioned TOML document with a closed set of keys."""

from __future__ import annotations

import copy
import sys
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

CONFIG_VERSION = 1
PACKAGE_PREFIX = "package:"


class ConfigError(ValueError):
    pass


# section -> key -> accepted python types
_NUM = (int, float)
SCHEMA = {
    "": {"version": int, "seed": int, "n_seeds": int, "output_dir": str},
    "trace": {"path": str, "dt": _NUM, "synth": dict},
    "trace.synth": {"n_nodes": int, "area_m": _NUM, "speed_range": list, "pause_range": list,
                    "duration_hours": _NUM, "seed": int},
    "graph": {"path": str, "model": str, "m": int, "seed": int},
    "trust": {"epsilon": _NUM, "rho": _NUM, "tau": _NUM, "mu": _NUM, "sigma2": _NUM,
              "decay_half_life_days": _NUM},
    "sim": {"encounter_range": _NUM, "encounter_prob": _NUM, "horizon_hours": _NUM,
            "store_capacity": int, "max_messages_per_exchange": int, "min_encounter_interval": _NUM,
            "drop_threshold": _NUM, "psi_cap": int, "class_fraction": _NUM, "epidemic_baseline": bool,
            "record_every": int},
    "adversary": {"kind": str, "fraction": _NUM, "shared_friend_ids": bool, "forward_honest": bool,
                  "radius_m": _NUM, "count": int, "placement": str},
    "anonymity": {"confidence_grid": list, "samples": int, "multiplier": str, "multiplier_value": _NUM,
                  "weights": list, "rates": list, "n_pairs": int, "encounter_range": _NUM, "n_max": int,
                  "max_hops": int, "seed": int},
    "leakage": {"epsilons": list, "selection": str, "alpha": _NUM, "beta": _NUM, "gamma": _NUM,
                "n_edges": int, "horizon": _NUM, "n_records": int, "trials": int},
    "pathloss": {"p_jammer": _NUM, "p_phone": _NUM, "link_distance": _NUM, "frequency": _NUM},
}


def _check(tree: dict, section: str = "") -> None:
    allowed = SCHEMA[section]
    for key, value in tree.items():
        name = f"{section}.{key}" if section else key
        if section == "" and key in SCHEMA and isinstance(value, dict):
            _check(value, key)
            continue
        if key not in allowed:
            raise ConfigError(f"unknown config key {name!r}")
        if allowed[key] is dict:
            if not isinstance(value, dict):
                raise ConfigError(f"{name} must be a table")
            _check(value, name)
            continue
        types = allowed[key] if isinstance(allowed[key], tuple) else (allowed[key],)
        if isinstance(value, bool) and bool not in types:
            raise ConfigError(f"{name} has the wrong type")
        if not isinstance(value, types):
            raise ConfigError(f"{name} must be {'/'.join(t.__name__ for t in types)}")


class RunConfig:
    """Parsed and validated configuration; ``base`` resolves relative paths."""

    def __init__(self, tree: dict, base: Path):
        self.tree = tree
        self.base = base
        self.validate()

    def validate(self) -> None:
        version = self.tree.get("version")
        if version is None:
            raise ConfigError("config is missing 'version'")
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {version} (expected {CONFIG_VERSION})")
        _check(self.tree)

    def section(self, name: str) -> dict:
        return dict(self.tree.get(name, {}))

    def get(self, key, default=None):
        return self.tree.get(key, default)

    def resolve(self, value: str) -> Path:
        if value.startswith(PACKAGE_PREFIX):
            return Path(str(resources.files("rangzen") / "data" / value[len(PACKAGE_PREFIX):]))
        p = Path(value)
        return p if p.is_absolute() else self.base / p

    def require_file(self, value: str) -> Path:
        p = self.resolve(value)
        if not p.is_file():
            raise ConfigError(f"file not found: {p}")
        return p

    def check_files(self) -> None:
        for sec in ("trace", "graph"):
            path = self.tree.get(sec, {}).get("path")
            if path is not None:
                self.require_file(path)

    def override(self, assignment: str) -> None:
        """Apply ``section.key=value`` (value in TOML syntax, bare words as strings)."""
        if "=" not in assignment:
            raise ConfigError(f"override {assignment!r} is not key=value")
        dotted, raw = assignment.split("=", 1)
        parts = [p.strip() for p in dotted.strip().split(".") if p.strip()]
        if not parts:
            raise ConfigError(f"override {assignment!r} has no key")
        try:
            value = tomllib.loads(f"v = {raw.strip()}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw.strip()
        tree = copy.deepcopy(self.tree)
        node = tree
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {assignment!r} walks through a value")
        node[parts[-1]] = value
        RunConfig(tree, self.base)  # validate before committing
        self.tree = tree


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        tree = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return RunConfig(tree, path.parent)


def bundled_config(name: str) -> Path:
    return Path(str(resources.files("rangzen") / "data" / name))
