"""Run configuration: one flat document merged from config file and flags.

The config file is TOML (flat key/value, keys named exactly like the CLI
flags); explicit flags win over file values.  The resolved config is hashed
and the hash is embedded in every output artifact for provenance.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError


@dataclass(frozen=True)
class RunConfig:
    seed: int = 7
    sigma_threshold: float = 3.0
    block: int = 16
    var_threshold: float = 100.0
    max_lag: int = 32
    top_signals: int = 5
    min_branch_len: int = 16
    feature_set: str = "fused"
    k: int = 10
    epochs: int = 50
    batch_size: int = 128
    lr0: float = 0.001
    plateau_patience: int = 10
    plateau_factor: float = 0.1
    plateau_min_delta: float = 1e-6
    val_fraction: float = 0.1
    hidden: tuple = (400, 400)
    bpcer_targets: tuple = (0.002, 0.01)
    manifest: str = ""
    outdir: str = ""

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "bpcer_targets", tuple(float(b) for b in self.bpcer_targets))
        if self.feature_set not in ("static", "dynamic", "fused"):
            raise ConfigError(f"feature_set must be static|dynamic|fused, got {self.feature_set!r}")
        if self.k < 2:
            raise ConfigError("k must be >= 2")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        d["bpcer_targets"] = list(self.bpcer_targets)
        return d

    @property
    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def load_config(path) -> RunConfig:
    """Parse a TOML config file into a RunConfig; unknown keys are fatal."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    unknown = sorted(set(doc) - _FIELD_NAMES)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    try:
        return RunConfig(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def merge_flags(config: RunConfig, **flags) -> RunConfig:
    """Overlay non-None flag values onto a config (flags win)."""
    updates = {k: v for k, v in flags.items() if v is not None}
    unknown = sorted(set(updates) - _FIELD_NAMES)
    if unknown:
        raise ConfigError(f"unknown config fields {unknown}")
    try:
        return replace(config, **updates)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
