"""Pipeline configuration: one YAML/JSON document plus ``RVOS_`` env overrides.

Nested fields are addressed with double underscores, e.g.
``RVOS_SAMPLER__DELTA=0.25`` or ``RVOS_BACKENDS__PROPAGATOR__MODE=static``.
Values are parsed as YAML scalars.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from .backends import ROLES, BackendEndpoint
from .difficulty import DifficultyConfig
from .errors import ConfigError
from .rewards import RewardConfig
from .sampler import SamplerConfig

_SECTIONS = {"sampler": SamplerConfig, "rewards": RewardConfig, "difficulty": DifficultyConfig}
_TOP_LEVEL = ("sampler", "rewards", "difficulty", "backends", "workers", "seed")


@dataclass(frozen=True)
class PipelineConfig:
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    rewards: RewardConfig = field(default_factory=RewardConfig)
    difficulty: DifficultyConfig = field(default_factory=DifficultyConfig)
    backends: Mapping[str, BackendEndpoint] = field(default_factory=lambda: {r: BackendEndpoint() for r in ROLES})
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def with_backend_mode(self, mode: str, trace_path: str | None = None) -> "PipelineConfig":
        """Force every role onto ``mode``, keeping per-role options."""
        eps = {}
        for role in ROLES:
            old = self.backends[role]
            eps[role] = _endpoint({
                "mode": mode, "trace_path": trace_path if mode == "trace" else None,
                "base_url": old.base_url if mode == "live" else None,
                "timeout": old.timeout, "retries": old.retries, "max_in_flight": old.max_in_flight,
                "token": old.token, "options": dict(old.options)}, role)
        return PipelineConfig(self.sampler, self.rewards, self.difficulty, eps, self.workers, self.seed)


def _build(cls, data: Mapping[str, Any], where: str):
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {where} fields: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _endpoint(data: Mapping[str, Any], role: str) -> BackendEndpoint:
    return _build(BackendEndpoint, data, f"backends.{role}")


def _apply_env(doc: dict, environ: Mapping[str, str]) -> dict:
    for key, raw in environ.items():
        if not key.startswith("RVOS_"):
            continue
        path = key[len("RVOS_"):].lower().split("__")
        if path[0] not in _TOP_LEVEL:
            continue
        node = doc
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{key} addresses a non-mapping field")
        node[path[-1]] = yaml.safe_load(raw)
    return doc


def config_from_dict(doc: Mapping[str, Any] | None, environ: Mapping[str, str] | None = None) -> PipelineConfig:
    doc = _apply_env(dict(doc or {}), os.environ if environ is None else environ)
    unknown = set(doc) - set(_TOP_LEVEL)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for name, cls in _SECTIONS.items():
        if name in doc:
            kwargs[name] = _build(cls, doc[name], name)
    backends_doc = doc.get("backends", {}) or {}
    unknown_roles = set(backends_doc) - set(ROLES)
    if unknown_roles:
        raise ConfigError(f"unknown backend roles: {sorted(unknown_roles)}")
    kwargs["backends"] = {r: _endpoint(backends_doc.get(r, {}) or {}, r) for r in ROLES}
    for name in ("workers", "seed"):
        if name in doc:
            kwargs[name] = int(doc[name])
    try:
        return PipelineConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path=None, environ: Mapping[str, str] | None = None) -> PipelineConfig:
    doc: dict = {}
    if path is not None:
        try:
            doc = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML/JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"config {path} must hold a mapping")
    return config_from_dict(doc, environ)
