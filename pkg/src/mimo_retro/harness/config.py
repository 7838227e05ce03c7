"""Experiment configuration: defaults, validation and JSON / TOML loading."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = [
    "EXPERIMENTS",
    "LINK_SCHEMES",
    "SCHED_SCHEMES",
    "ConfigError",
    "ExperimentConfig",
    "default_config",
    "load_config",
    "config_from_dict",
]

EXPERIMENTS = ("fig3_mat_vs_lzfb", "fig2_sched_parity", "fig4_sched_modes", "custom")

#: link-level schemes, evaluated per (rho, SNR)
LINK_SCHEMES = ("mat_perfect", "mat_trained", "lzfb_perfect", "lzfb_trained")

#: scheduler schemes -> (engine mode, scheduled?)
SCHED_SCHEMES = {
    "mat_session": ("mat_session", True),
    "pc_2u": ("packet_centric_2u", True),
    "pc_3u_2r": ("packet_centric_3u_2r", True),
    "pc_3u_3r": ("packet_centric_3u_3r", True),
    "mat_2u": ("packet_centric_2u", False),
    "mat_3u_2r": ("packet_centric_3u_2r", False),
    "mat_3u_3r": ("packet_centric_3u_3r", False),
}

_DEFAULT_SCHEMES = {
    "fig3_mat_vs_lzfb": list(LINK_SCHEMES),
    "fig2_sched_parity": ["mat_session", "pc_2u", "mat_2u"],
    "fig4_sched_modes": ["pc_2u", "pc_3u_2r", "pc_3u_3r", "mat_2u", "mat_3u_2r", "mat_3u_3r"],
}

_DEFAULT_SAMPLES = {
    "fig3_mat_vs_lzfb": 20000,
    "fig2_sched_parity": 8000,
    "fig4_sched_modes": 4000,
    "custom": 2000,
}

_U64 = 2 ** 64


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


@dataclass
class ExperimentConfig:
    """
    Full description of an experiment run.

    ``samples`` counts channel realizations for link-level schemes and
    decoded packets for scheduler schemes. ``schemes`` defaults to the
    experiment's standard set; ``custom`` runs with no scheme list use
    the packet-centric ``K``-user ``R``-round scheme and its unscheduled
    counterpart.
    """
    experiment: str
    snr_grid_dB: list[float] = field(default_factory=lambda: [float(s) for s in range(0, 41, 5)])
    rho_list: list[float] = field(default_factory=lambda: [1.0, 0.99, 0.95])
    beta1: float = 2.0
    beta_f: float = 2.0
    P1_over_P: float = 1.0
    L: int = 20
    N: int = 2
    K: int = 2
    R: int = 2
    samples: int = 2000
    f_samples: int = 200
    seed: int = 0
    slot_spacing: int = 1
    initial_backlog: float = 100.0
    schemes: Optional[list[str]] = None

    def __post_init__(self) -> None:
        self.validate()

    def resolved_schemes(self) -> list[str]:
        if self.schemes is not None:
            return list(self.schemes)
        if self.experiment in _DEFAULT_SCHEMES:
            return list(_DEFAULT_SCHEMES[self.experiment])
        tag = "2u" if self.K == 2 else f"3u_{self.R}r"
        return [f"pc_{tag}", f"mat_{tag}"]

    def validate(self) -> None:
        def bad(name: str, why: str) -> ConfigError:
            return ConfigError(f"{name}: {why}")

        if self.experiment not in EXPERIMENTS:
            raise bad("experiment", f"unknown id {self.experiment!r}; expected one of {EXPERIMENTS}")
        if not self.snr_grid_dB:
            raise bad("snr_grid_dB", "grid must be non-empty")
        if any(not math.isfinite(s) for s in self.snr_grid_dB):
            raise bad("snr_grid_dB", "entries must be finite")
        if len(set(self.snr_grid_dB)) != len(self.snr_grid_dB):
            raise bad("snr_grid_dB", "entries must be distinct")
        if not self.rho_list:
            raise bad("rho_list", "list must be non-empty")
        if any(not 0.0 <= r <= 1.0 for r in self.rho_list):
            raise bad("rho_list", "entries must lie in [0, 1]")
        if not self.beta1 >= 1:
            raise bad("beta1", f"must be >= 1, got {self.beta1}")
        for name in ("beta_f", "P1_over_P"):
            if not getattr(self, name) > 0:
                raise bad(name, f"must be positive, got {getattr(self, name)}")
        if self.K not in (2, 3):
            raise bad("K", f"simulated schemes serve 2 or 3 users, got {self.K}")
        if not 2 <= self.R <= self.K:
            raise bad("R", f"must lie in [2, K={self.K}], got {self.R}")
        if self.N < 1:
            raise bad("N", "must be >= 1")
        if self.samples < 1:
            raise bad("samples", "must be >= 1")
        if self.f_samples < 1:
            raise bad("f_samples", "must be >= 1")
        if not 0 <= self.seed < _U64:
            raise bad("seed", "must be an unsigned 64-bit integer")
        if self.slot_spacing < 1:
            raise bad("slot_spacing", "must be >= 1")
        if self.initial_backlog < 0:
            raise bad("initial_backlog", "must be non-negative")
        schemes = self.resolved_schemes()
        if not schemes:
            raise bad("schemes", "list must be non-empty")
        for s in schemes:
            if s not in LINK_SCHEMES and s not in SCHED_SCHEMES:
                raise bad("schemes", f"unknown scheme {s!r}")
        if len(set(schemes)) != len(schemes):
            raise bad("schemes", "entries must be distinct")
        needs = max((3 if "3u" in s else 2) for s in schemes)
        if any(s in SCHED_SCHEMES and SCHED_SCHEMES[s][1] for s in schemes) and self.L < needs:
            raise bad("L", f"scheduled schemes need L >= {needs}, got {self.L}")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def fingerprint(self) -> str:
        """SHA-256 of the canonical JSON form of the configuration."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_INT_FIELDS = {"L", "N", "K", "R", "samples", "f_samples", "seed", "slot_spacing"}
_FLOAT_FIELDS = {"beta1", "beta_f", "P1_over_P", "initial_backlog"}


def _coerce(name: str, value: Any) -> Any:
    if name in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return value
    if name in _FLOAT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        return float(value)
    if name in ("snr_grid_dB", "rho_list"):
        if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, (int, float))
                                              for v in value):
            raise ConfigError(f"{name}: expected a list of numbers, got {value!r}")
        return [float(v) for v in value]
    if name == "schemes":
        if value is None:
            return None
        if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
            raise ConfigError(f"schemes: expected a list of strings, got {value!r}")
        return list(value)
    if name == "experiment" and not isinstance(value, str):
        raise ConfigError(f"experiment: expected a string, got {value!r}")
    return value


def default_config(experiment: str, **overrides: Any) -> ExperimentConfig:
    """Standard configuration of ``experiment`` with field overrides."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown id {experiment!r}; expected one of {EXPERIMENTS}")
    base: dict[str, Any] = {"experiment": experiment, "samples": _DEFAULT_SAMPLES[experiment]}
    base.update(overrides)
    return config_from_dict(base)


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    """
    Build a configuration from a mapping, rejecting unknown keys.

    Fields that are absent take the experiment's defaults.
    """
    if not isinstance(data, dict):
        raise ConfigError("config: expected a mapping")
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown configuration key")
    if "experiment" not in data:
        raise ConfigError("experiment: missing required key")
    exp = _coerce("experiment", data["experiment"])
    values: dict[str, Any] = {"experiment": exp}
    if "samples" not in data and exp in _DEFAULT_SAMPLES:
        values["samples"] = _DEFAULT_SAMPLES[exp]
    for k, v in data.items():
        values[k] = _coerce(k, v)
    return ExperimentConfig(**values)


def load_config(path: str | Path) -> ExperimentConfig:
    """
    Read a configuration from a JSON or TOML file.

    A results sidecar (a JSON object with a top-level ``config`` entry)
    is accepted as well, so an emitted run can be reproduced directly.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    if path.suffix.lower() == ".toml":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config: invalid TOML in {path}: {exc}") from exc
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON in {path}: {exc}") from exc
    if isinstance(data, dict) and "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    return config_from_dict(data)
