"""Operator configuration: a flat ``key = value`` text file plus flag overrides.

Only the config-file path comes from the environment (PANTRAINER_CONFIG);
everything else is file or flags, with flags winning.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

CONFIG_ENV = "PANTRAINER_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    window_ms: int = 150
    scroll_speed_mps: float = 0.6
    highway_length_m: float = 1.2
    body_radius_m: float = 0.28
    dimple_radius_m: float = 0.05
    baud: int = 9600
    serial_mode: str = "8N1"
    palette: Optional[tuple[str, ...]] = None
    cal_pose_threshold: int = 1
    cal_session_threshold: int = 3

    def __post_init__(self):
        for name in ("window_ms", "scroll_speed_mps", "highway_length_m",
                     "body_radius_m", "dimple_radius_m", "baud"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.palette is not None and len(set(self.palette)) != len(self.palette):
            raise ConfigError("palette colors must be pairwise distinct")
        for name in ("cal_pose_threshold", "cal_session_threshold"):
            if not 0 <= getattr(self, name) <= 3:
                raise ConfigError(f"{name} must be within 0..3")


def _parse_value(name: str, raw: str):
    kind = {f.name: f.type for f in fields(Config)}[name]
    if name == "palette":
        return tuple(c.strip() for c in raw.split(",") if c.strip())
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def load_config(path: str | Path) -> Config:
    values = {}
    known = {f.name for f in fields(Config)}
    for no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in known:
            raise ConfigError(f"{path}:{no}: unknown key {key!r}")
        try:
            values[key] = _parse_value(key, val)
        except ValueError as exc:
            raise ConfigError(f"{path}:{no}: {exc}") from None
    return Config(**values)


def resolve_config(path_flag: Optional[str] = None) -> Config:
    """Config from the --config flag, else $PANTRAINER_CONFIG, else defaults."""
    path = path_flag or os.environ.get(CONFIG_ENV)
    return load_config(path) if path else Config()


def with_overrides(cfg: Config, **overrides) -> Config:
    changed = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **changed) if changed else cfg
