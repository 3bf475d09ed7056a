"""Pipeline configuration: defaults, validation, and key=value file parsing.

Secrets never live in config files; remote client authentication names an
environment variable instead (``remote_auth_env``), read at call time.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import PreconditionError
from .fusion import AblationFlags


@dataclass
class RemoteClientSpec:
    endpoint: str = ""
    model: str = ""
    auth_env: str | None = None
    timeout: float = 30.0
    retries: int = 2
    max_inflight: int = 4


@dataclass
class PipelineConfig:
    """All tunables in one place; defaults are the shipped operating point."""

    embedding_dim: int = 256
    paa_segments: int = 20
    dtw_band: int | None = None
    eeg_top_k: int = 5
    hyperedge_top_k: int = 1
    retrieval_layer: str | None = "knowledge"
    closure_radius: int = 1
    closure_budget: int = 32
    pseudo_tau: float = 0.80
    pseudo_max_fills: int | None = None
    link_case_hyperedges: bool = True
    eeg_normalize: bool = True
    channel_blocked_dtw: bool = False
    ablation: AblationFlags = field(default_factory=AblationFlags)
    client: str = "mock"  # "mock" | "remote"
    remote: RemoteClientSpec = field(default_factory=RemoteClientSpec)
    bootstrap_resamples: int = 1000
    seed: int = 7

    def __post_init__(self):
        for name in (
            "embedding_dim",
            "paa_segments",
            "eeg_top_k",
            "hyperedge_top_k",
            "closure_budget",
        ):
            if getattr(self, name) < 1:
                raise PreconditionError(f"{name} must be >= 1")
        if self.closure_radius < 0:
            raise PreconditionError("closure_radius must be >= 0")
        if not 0.0 < self.pseudo_tau <= 1.0:
            raise PreconditionError("pseudo_tau must be in (0, 1]")
        if self.dtw_band is not None and self.dtw_band < 0:
            raise PreconditionError("dtw_band must be >= 0")
        if self.client not in ("mock", "remote"):
            raise PreconditionError(f"unknown client {self.client!r}")

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "PipelineConfig":
        """Build from flat string key/value pairs (config file or --set overrides)."""
        config = cls()
        config.apply(mapping)
        return config

    def apply(self, mapping: dict[str, str]) -> None:
        simple = {f.name: f for f in fields(self) if f.name not in ("ablation", "remote")}
        for key, raw in mapping.items():
            key = key.strip().lower()
            if key in ("cl", "il", "el"):
                setattr(self.ablation, key, _parse_bool(key, raw))
            elif key.startswith("remote_"):
                attr = key[len("remote_") :]
                if not hasattr(self.remote, attr):
                    raise PreconditionError(f"unknown config key {key!r}")
                current = getattr(self.remote, attr)
                setattr(self.remote, attr, _coerce(key, raw, type(current) if current is not None else str))
            elif key in simple:
                f = simple[key]
                setattr(self, key, _coerce_field(key, raw, f.type))
            else:
                raise PreconditionError(f"unknown config key {key!r}")
        self.__post_init__()

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        """Parse a ``key = value`` file; blank lines and ``#`` comments ignored."""
        mapping: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                if "=" not in stripped:
                    raise PreconditionError(f"{path}: line {lineno}: expected key = value")
                key, _, value = stripped.partition("=")
                mapping[key.strip()] = value.strip()
        return cls.from_mapping(mapping)


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_bool(key: str, raw: str) -> bool:
    val = raw.strip().lower()
    if val in _TRUE:
        return True
    if val in _FALSE:
        return False
    raise PreconditionError(f"config key {key!r}: expected a boolean, got {raw!r}")


def _coerce(key: str, raw: str, target: type):
    raw = raw.strip()
    if raw.lower() in ("none", ""):
        return None
    if target is bool:
        return _parse_bool(key, raw)
    try:
        return target(raw)
    except ValueError as exc:
        raise PreconditionError(f"config key {key!r}: {exc}") from exc


def _coerce_field(key: str, raw: str, annotation: str):
    # annotations are strings under `from __future__ import annotations`
    ann = str(annotation)
    if "bool" in ann:
        return _parse_bool(key, raw)
    if "int" in ann:
        return _coerce(key, raw, int)
    if "float" in ann:
        return _coerce(key, raw, float)
    return _coerce(key, raw, str)
