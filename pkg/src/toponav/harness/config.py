"""Run configuration: built-in defaults < config file < environment."""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass

ENV_PREFIX = "TOPONAV_"


@dataclass(frozen=True)
class RunConfig:
    gamma: float = 0.5
    K: int = 5
    nms_deg: float = 30.0
    nms_m: float = 0.5
    n_rays: int = 120
    max_range: float = 5.0
    tryout: bool = True
    delete_ghosts: bool = True
    accumulate: bool = True
    max_actions_per_plan: int = 500
    action_budget: int = 5000
    seed: int = 0
    # None keeps the scenario's regime
    sliding: str | None = None
    chassis_radius: float | None = None
    max_goal_predictions: int | None = None
    geodesic_ne: bool = True

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)


def _coerce(field: dataclasses.Field, raw: str):
    raw = raw.strip()
    kind = field.type if isinstance(field.type, str) else field.type.__name__
    if raw.lower() in ("none", "") and "None" in kind:
        return None
    if kind.startswith("bool"):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{field.name}: not a boolean: {raw!r}")
    if kind.startswith("int"):
        return int(raw)
    if kind.startswith("float"):
        return float(raw)
    return raw


def load_config(path=None, environ=None, base: RunConfig | None = None) -> RunConfig:
    """Read an INI ``[run]`` section and ``TOPONAV_<FIELD>`` variables."""
    cfg = base or RunConfig()
    by_name = {f.name: f for f in dataclasses.fields(RunConfig)}
    by_key = {name.lower(): f for name, f in by_name.items()}
    updates = {}
    if path is not None:
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise FileNotFoundError(path)
        if parser.has_section("run"):
            for key, value in parser.items("run"):
                if key not in by_key:
                    raise ValueError(f"unknown config key {key!r} in {path}")
                updates[by_key[key].name] = _coerce(by_key[key], value)
    environ = os.environ if environ is None else environ
    for name, f in by_name.items():
        var = ENV_PREFIX + name.upper()
        if var in environ:
            updates[name] = _coerce(f, environ[var])
    return cfg.replace(**updates)
