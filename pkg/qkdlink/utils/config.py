"""
Experiment Configuration

Flat `key = value` text with '#' comments:

    # Day-1 operating point
    channel_loss_db = 9.6
    frame_size = 200000
    code_dir = codes/

Values are coerced to the type of the matching ExperimentConfig field.
Unknown keys and missing referenced files are rejected at load.
"""

from __future__ import annotations

import dataclasses
import hashlib
import os
import typing
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from qkdlink.exceptions import BudgetError, ConfigError, ParameterError
from qkdlink.sim.drift import DriftState
from qkdlink.sim.params import PARAM_FIELDS, SystemParams
from qkdlink.security.budget import SecurityBudget


# Keys that may differ between the two peers of a session.
LOCAL_KEYS = frozenset({
    "alice_seed", "out_dir", "endpoint", "alarm_webhook_url", "jobs",
    "code_dir", "bootstrap_key_path", "record_mode", "duration_s",
})

ENV_ALARM_WEBHOOK = "QKD_ALARM_WEBHOOK"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything one experiment needs, defaulting to the field-trial point

    SystemParams keys are accepted under their own names.
    """

    # --- physical link (SystemParams) ---
    source_rate_hz: float = SystemParams.source_rate_hz
    eta_qd: float = SystemParams.eta_qd
    eta_transport: float = SystemParams.eta_transport
    eta_fc: float = SystemParams.eta_fc
    g2: float = SystemParams.g2
    eta_encoder: float = SystemParams.eta_encoder
    channel_loss_db: float = SystemParams.channel_loss_db
    eta_receiver: float = SystemParams.eta_receiver
    detector_efficiency: float = SystemParams.detector_efficiency
    dark_count_hz: float = SystemParams.dark_count_hz
    dead_time_s: float = SystemParams.dead_time_s
    temporal_window_s: float = SystemParams.temporal_window_s
    burst_len: int = SystemParams.burst_len
    misalignment_qber: float = SystemParams.misalignment_qber
    jitter_s: float = SystemParams.jitter_s
    basis_ratio: float = SystemParams.basis_ratio

    # --- drift and compensation ---
    drift_amplitude_rad: float = 0.0
    drift_step_sigma: float = 0.05
    compensation: bool = True

    # --- simulation run ---
    seed: int = 1
    duration_s: float = 1.0
    chunk_pulses: int = 1 << 20
    record_mode: str = "clicked"

    # --- post-processing ---
    frame_size: int = 200_000
    sample_fraction: float = 0.1
    discard_policy: str = "drop"
    f_target: float = 1.17
    max_iters: int = 60
    max_attempts: int = 2
    retry_step: float = 0.05
    delta: float = 0.1
    code_seed: int = 1
    code_dir: Optional[Path] = None
    distribution_dir: Optional[Path] = None

    # --- security budget ---
    eps_total: float = SecurityBudget.eps_total
    eps_pe: float = SecurityBudget.eps_pe
    eps_cor: float = SecurityBudget.eps_cor
    eps_auth: float = SecurityBudget.eps_auth
    eps_pa: Optional[float] = None
    eps_bar: Optional[float] = None

    # --- session ---
    frames: int = 10
    max_chunks: int = 100_000
    public_seed: int = 2
    alice_seed: int = 3
    bootstrap_key_path: Optional[Path] = None
    bootstrap_seed: int = 7
    endpoint: str = "127.0.0.1:7700"
    alarm_webhook_url: Optional[str] = None

    # --- sweep ---
    loss_range: str = "0:30:2"
    q_intrinsic: float = 0.0325
    reference_raw_rate_hz: float = 47.9e3
    reference_loss_db: float = 9.6
    jobs: int = 1

    # --- output ---
    out_dir: Path = Path("out")

    def __post_init__(self):
        for name in ("bootstrap_key_path", "distribution_dir"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise ConfigError(f"{name} points at a missing file: {path}")
        if self.record_mode not in ("clicked", "all", "none"):
            raise ConfigError(f"record_mode must be clicked, all or none, got {self.record_mode!r}")
        if self.discard_policy not in ("drop", "flag"):
            raise ConfigError(f"discard_policy must be drop or flag, got {self.discard_policy!r}")

    # =====================================================
    # Loading
    # =====================================================

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any], env: Optional[Mapping[str, str]] = None) -> "ExperimentConfig":
        """
        Build from a key/value mapping; string values are coerced

        Raises:
            ConfigError: On unknown keys, uncoercible values or missing files
        """
        hints = typing.get_type_hints(cls)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

        kwargs = {key: _coerce(key, value, hints[key]) for key, value in values.items()}
        env = os.environ if env is None else env
        if env.get(ENV_ALARM_WEBHOOK):
            kwargs["alarm_webhook_url"] = env[ENV_ALARM_WEBHOOK]
        try:
            config = cls(**kwargs)
            # Surface range errors at load, not mid-session.
            config.system_params()
            config.security_budget()
        except ConfigError:
            raise
        except (ParameterError, BudgetError) as exc:
            raise ConfigError(str(exc)) from exc
        return config

    @classmethod
    def from_text(cls, text: str, env: Optional[Mapping[str, str]] = None) -> "ExperimentConfig":
        return cls.from_mapping(parse_config_text(text), env)

    @classmethod
    def from_file(cls, path: Union[str, Path], env: Optional[Mapping[str, str]] = None) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        return cls.from_text(path.read_text(), env)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # =====================================================
    # Derived objects
    # =====================================================

    def system_params(self) -> SystemParams:
        return SystemParams(**{name: getattr(self, name) for name in PARAM_FIELDS if hasattr(self, name)})

    def security_budget(self) -> SecurityBudget:
        return SecurityBudget(
            eps_total=self.eps_total,
            eps_pe=self.eps_pe,
            eps_cor=self.eps_cor,
            eps_auth=self.eps_auth,
            eps_pa=self.eps_pa,
            eps_bar=self.eps_bar,
        )

    def drift_state(self) -> DriftState:
        return DriftState(amplitude_rad=self.drift_amplitude_rad, step_sigma=self.drift_step_sigma, seed=self.seed)

    @property
    def n_pulses(self) -> int:
        return max(1, int(round(self.duration_s * self.source_rate_hz)))

    def host_port(self) -> Tuple[str, int]:
        return parse_endpoint(self.endpoint)

    # =====================================================
    # Canonical form
    # =====================================================

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}

    def canonical_text(self, shared_only: bool = False) -> str:
        """One `key = value` line per field in declaration order."""
        lines = []
        for key, value in self.to_dict().items():
            if shared_only and key in LOCAL_KEYS:
                continue
            lines.append(f"{key} = {_format(value)}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """SHA-256 over the keys both peers must agree on."""
        return hashlib.sha256(self.canonical_text(shared_only=True).encode()).hexdigest()


def parse_config_text(text: str) -> Dict[str, str]:
    """
    Parse flat key = value lines

    Raises:
        ConfigError: On malformed or duplicate lines
    """
    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {number}: empty key")
        if key in values:
            raise ConfigError(f"line {number}: duplicate key {key!r}")
        values[key] = value
    return values


def parse_endpoint(text: str) -> Tuple[str, int]:
    """'HOST:PORT' → (host, port)"""
    host, sep, port = text.rpartition(":")
    if not sep or not host or not port.isdigit() or not 0 < int(port) < 65536:
        raise ConfigError(f"endpoint must be HOST:PORT, got {text!r}")
    return host, int(port)


def _coerce(key: str, value: Any, hint) -> Any:
    if not isinstance(value, str):
        return value
    optional = typing.get_origin(hint) is Union and type(None) in typing.get_args(hint)
    if optional:
        if value.lower() in ("", "none"):
            return None
        hint = next(a for a in typing.get_args(hint) if a is not type(None))
    try:
        if hint is bool:
            lowered = value.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(value)
        if hint is int:
            return int(float(value)) if "e" in value.lower() else int(value)
        if hint is float:
            return float(value)
        if hint is Path:
            return Path(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot read {value!r} as {getattr(hint, '__name__', hint)}") from exc


def _format(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)
