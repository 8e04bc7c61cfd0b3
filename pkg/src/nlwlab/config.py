"""TOML run configurations: strict schema, resolved frozen copies.

A run config describes one experiment.  Sections and keys outside the
schema are rejected so typos fail loudly instead of silently running a
default.  `resolve` applies command-line overrides and returns a plain
dict that is written verbatim next to the experiment outputs.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXPERIMENT_KINDS = (
    "randomize",
    "linear-evolve",
    "solve",
    "strichartz-mc",
    "khintchine",
    "energy-bound",
    "smalldata",
    "continuity",
    "calibrate-tau",
)

# section -> {key: (types, required)}
_SCHEMA = {
    "experiment": {
        "kind": (str, True),
        "name": (str, True),
    },
    "grid": {
        "d": (int, True),
        "n": (int, True),
        "L": ((int, float), True),
    },
    "data": {
        "path": (str, False),
        "profile": (str, False),
        "s": ((int, float), False),
        "target_norm": ((int, float), False),
        "width": ((int, float), False),
        "power": ((int, float), False),
        "band_limit": (bool, False),
        "bumps": (int, False),
    },
    "randomization": {
        "distribution": (str, False),
        "cutoff": (str, False),
        "s": ((int, float), False),
    },
    "ensemble": {
        "n_samples": (int, False),
        "master_seed": (int, False),
        "time_samples": (int, False),
    },
    "solver": {
        "dt": ((int, float), False),
        "t_end": ((int, float), False),
        "dealias": (str, False),
        "sample_stride": (int, False),
        "nonlinear": (bool, False),
    },
    "norms": {
        "q": (list, False),
        "r": (list, False),
        "t_end": ((int, float), False),
    },
    "tail": {
        "q": ((int, float), False),
        "r": ((int, float), False),
        "t0": ((int, float), False),
        "t1": ((int, float), False),
        "exceedance_gamma": ((int, float), False),
        "r2_min": ((int, float), False),
    },
    "khintchine": {
        "dim": (int, False),
        "half_width": (int, False),
        "sigma": ((int, float), False),
        "p_list": (list, False),
        "n_samples": (int, False),
    },
    "smalldata": {
        "eps_list": (list, False),
        "eta": ((int, float), False),
        "T": ((int, float), False),
    },
    "continuity": {
        "eta_list": (list, False),
        "T": ((int, float), False),
        "pipeline": (str, False),
    },
    "tau": {
        "A_list": (list, False),
        "K_list": (list, False),
        "gamma": ((int, float), False),
        "T": ((int, float), False),
        "eps": ((int, float), False),
    },
    "times": {
        "values": (list, False),
    },
}

_REQUIRED_SECTIONS = ("experiment", "grid")


class ConfigError(ValueError):
    pass


def load_config(path) -> dict:
    """Parse and validate a TOML run configuration."""
    path = Path(path)
    with open(path, "rb") as f:
        raw = tomllib.load(f)
    validate_config(raw, source=str(path))
    return raw


def validate_config(cfg: dict, source: str = "<config>") -> None:
    for sec in _REQUIRED_SECTIONS:
        if sec not in cfg:
            raise ConfigError(f"{source}: missing required section [{sec}]")
    for sec, body in cfg.items():
        if sec not in _SCHEMA:
            raise ConfigError(f"{source}: unknown section [{sec}]")
        if not isinstance(body, dict):
            raise ConfigError(f"{source}: section [{sec}] must be a table")
        schema = _SCHEMA[sec]
        for key, val in body.items():
            if key not in schema:
                raise ConfigError(f"{source}: unknown key {key!r} in [{sec}]")
            types, _ = schema[key]
            if not isinstance(val, types):
                raise ConfigError(
                    f"{source}: key {key!r} in [{sec}] has type "
                    f"{type(val).__name__}, expected {types}"
                )
        for key, (_, required) in schema.items():
            if required and key not in body:
                raise ConfigError(f"{source}: missing key {key!r} in [{sec}]")
    kind = cfg["experiment"]["kind"]
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(
            f"{source}: unknown experiment kind {kind!r}; "
            f"choose from {', '.join(EXPERIMENT_KINDS)}"
        )


def resolve(cfg: dict, overrides: dict) -> dict:
    """Deep-copy the config and fold in command-line overrides.

    Supported overrides: seed (-> ensemble.master_seed).
    """
    out = json.loads(json.dumps(cfg))
    if overrides.get("seed") is not None:
        out.setdefault("ensemble", {})["master_seed"] = int(overrides["seed"])
    return out


def write_resolved(cfg: dict, path) -> None:
    with open(path, "w") as f:
        json.dump(cfg, f, indent=2, sort_keys=True)
        f.write("\n")
