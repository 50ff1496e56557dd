"""Declarative TOML configuration and the reproducibility manifest.

Every experiment knob is a named key under one of the sections below;
``--set section.key=value`` overrides individual keys.  Validation is
strict: unknown sections or keys, or values of the wrong type, are
rejected with the offending key path in the message.
"""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .agents import UUParams
from .engine import (POLICY_KINDS, HistoricalSource, PolicySpec, SimConfig,
                     SweepConfig, SyntheticSource)
from .pricefeed import REGIMES


class ConfigError(Exception):
    """Configuration is malformed; the message names the offending key."""


DEFAULT_CONFIG = {
    "run": {
        "initial_pool_value": 25_000_000.0,
        "alpha": 0.0,
        "master_seed": 1,
        "iu_before_uu": False,
    },
    "fee_policy": {
        "kind": "fx",
        "f_fx": 30,
        "f_init": 30,
        "f_step": 1,
        "f_ad": 45,
        "f_nad": 15,
    },
    "uu": {
        "prob_trade_per_block": 0.5,
        "size_mean": 0.001,
        "size_std": 0.0005,
        "max_fraction": 0.05,
    },
    "path_source": {
        "kind": "synthetic",
        "n_paths": 100,
        "n_blocks": 1440,
        "regime": "high_vol",
        "p0_a": 1.0,
        "p0_b": 1.0,
    },
    "sweep": {
        "pool_value": 25_000_000.0,
        "p_a": 1.0,
        "p_b": 1.0,
        "trade_fraction": 0.05,
        "alpha": 0.0,
        "fee_min": 0.0,
        "fee_max": 1.0,
        "fee_step": 0.0025,
        "n_trials": 100_000,
        "seed": 1,
    },
}

_OPTIONAL_KEYS = {
    "path_source": {"mu_a", "sigma_a", "mu_b", "sigma_b", "file", "file_a", "file_b"},
}


def _allowed_keys(section: str) -> set[str]:
    return set(DEFAULT_CONFIG[section]) | _OPTIONAL_KEYS.get(section, set())


def load_config(config_file=None, overrides=(), seed=None) -> dict:
    """Defaults, overlaid with a TOML file, ``--set`` pairs, and ``--seed``."""
    raw = copy.deepcopy(DEFAULT_CONFIG)
    if config_file is not None:
        path = Path(config_file)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            user = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path}: {exc}") from None
        _merge(raw, user)
    for pair in overrides:
        _apply_override(raw, pair)
    if seed is not None:
        raw["run"]["master_seed"] = int(seed)
        raw["sweep"]["seed"] = int(seed)
    return raw


def _merge(raw: dict, user: dict) -> None:
    for section, content in user.items():
        if section not in DEFAULT_CONFIG:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(content, dict):
            raise ConfigError(f"{section}: expected a table")
        allowed = _allowed_keys(section)
        for key, value in content.items():
            if key not in allowed:
                raise ConfigError(f"unknown config key {section}.{key}")
            raw[section][key] = value


def _apply_override(raw: dict, pair: str) -> None:
    if "=" not in pair:
        raise ConfigError(f"--set expects section.key=value, got {pair!r}")
    key_path, text = pair.split("=", 1)
    parts = key_path.strip().split(".")
    if len(parts) != 2:
        raise ConfigError(f"--set expects section.key=value, got {pair!r}")
    section, key = parts
    if section not in DEFAULT_CONFIG or key not in _allowed_keys(section):
        raise ConfigError(f"unknown config key {section}.{key}")
    raw[section][key] = _parse_value(text.strip())


def _parse_value(text: str):
    lowered = text.lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text.strip('"').strip("'")


def _get(raw: dict, section: str, key: str, types, predicate=None, what=""):
    value = raw[section].get(key)
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise ConfigError(f"{section}.{key}: expected {what or 'a number'}, got a boolean")
    if not isinstance(value, types):
        raise ConfigError(f"{section}.{key}: expected {what or types}, got {value!r}")
    if predicate is not None and not predicate(value):
        raise ConfigError(f"{section}.{key}: invalid value {value!r}")
    return value


def build_sim_config(raw: dict, keep_trades: bool = False) -> SimConfig:
    pool_value = _get(raw, "run", "initial_pool_value", (int, float),
                      lambda v: v > 0, "a positive number")
    alpha = _get(raw, "run", "alpha", (int, float), lambda v: v >= 0,
                 "a non-negative number")
    master_seed = _get(raw, "run", "master_seed", int, what="an integer")
    iu_before_uu = _get(raw, "run", "iu_before_uu", bool, what="a boolean")

    kind = _get(raw, "fee_policy", "kind", str,
                lambda v: v in POLICY_KINDS, f"one of {POLICY_KINDS}")
    fee_ints = {}
    for key in ("f_fx", "f_init", "f_step", "f_ad", "f_nad"):
        fee_ints[key] = _get(raw, "fee_policy", key, int,
                             lambda v: 0 <= v < 10_000,
                             "basis points in [0, 10000)")
    policy = PolicySpec(kind=kind, **fee_ints)

    try:
        uu = UUParams(
            prob_trade_per_block=float(_get(raw, "uu", "prob_trade_per_block",
                                            (int, float), what="a probability")),
            size_mean=float(_get(raw, "uu", "size_mean", (int, float))),
            size_std=float(_get(raw, "uu", "size_std", (int, float))),
            max_fraction=float(_get(raw, "uu", "max_fraction", (int, float))),
        )
    except ValueError as exc:
        raise ConfigError(f"uu: {exc}") from None

    src_kind = _get(raw, "path_source", "kind", str,
                    lambda v: v in ("synthetic", "historical"),
                    "'synthetic' or 'historical'")
    if src_kind == "synthetic":
        optional = {}
        for key in ("mu_a", "sigma_a", "mu_b", "sigma_b"):
            if key in raw["path_source"]:
                optional[key] = float(_get(raw, "path_source", key, (int, float)))
        source = SyntheticSource(
            n_paths=_get(raw, "path_source", "n_paths", int,
                         lambda v: v >= 1, "a positive integer"),
            n_blocks=_get(raw, "path_source", "n_blocks", int,
                          lambda v: v >= 1, "a positive integer"),
            regime=_get(raw, "path_source", "regime", str,
                        lambda v: v in REGIMES, f"one of {sorted(REGIMES)}"),
            p0_a=float(_get(raw, "path_source", "p0_a", (int, float),
                            lambda v: v > 0, "a positive number")),
            p0_b=float(_get(raw, "path_source", "p0_b", (int, float),
                            lambda v: v > 0, "a positive number")),
            **optional,
        )
    else:
        file = raw["path_source"].get("file")
        file_a = raw["path_source"].get("file_a")
        file_b = raw["path_source"].get("file_b")
        if file is None and (file_a is None or file_b is None):
            raise ConfigError(
                "path_source.file (or both path_source.file_a and "
                "path_source.file_b) required for historical data")
        source = HistoricalSource(file=file, file_a=file_a, file_b=file_b)

    try:
        return SimConfig(
            policy=policy, uu=uu, source=source,
            initial_pool_value=float(pool_value), alpha=float(alpha),
            master_seed=master_seed, iu_before_uu=iu_before_uu,
            keep_trades=keep_trades,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_sweep_config(raw: dict) -> SweepConfig:
    kwargs = {}
    for key in ("pool_value", "p_a", "p_b", "trade_fraction", "alpha",
                "fee_min", "fee_max", "fee_step"):
        kwargs[key] = float(_get(raw, "sweep", key, (int, float)))
    kwargs["n_trials"] = _get(raw, "sweep", "n_trials", int,
                              lambda v: v >= 1, "a positive integer")
    kwargs["seed"] = _get(raw, "sweep", "seed", int, what="an integer")
    try:
        return SweepConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from None


def canonical_json(raw: dict) -> str:
    return json.dumps(raw, sort_keys=True, separators=(",", ":"))


def run_id(raw: dict, extra: str = "") -> str:
    material = canonical_json(raw) + "|" + extra
    return hashlib.sha256(material.encode("utf-8")).hexdigest()[:12]


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """Everything needed to reproduce a command's outputs bit-exactly."""

    run_id: str
    command: str
    master_seed: int
    config: dict
    format_version: int = 1
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def add_input(self, path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def add_output(self, path) -> None:
        self.outputs[str(Path(path).name)] = sha256_file(path)

    def write(self, path) -> None:
        content = json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"
        Path(path).write_text(content, encoding="utf-8")
