"""Run configuration: parsing, overrides and engine construction.

A config file is YAML::

    params: {theta_u: 0.45, k_max: 3}
    agents:
      base: [object_recognition, scene_description, ocr]
      critics: [fact_checker, completeness_checker, logic_checker]
      aggregator: false
    integrate_mode: auto
    backend:
      kind: scripted              # or http
      fixture: scenarios/batch.yaml
      # http: base_url, model, api_key_env, top_logprobs, vocab_size,
      #       timeout, max_attempts, backoff, send_images, serial
    output_dir: runs
    seed: 0
    parallelism: 1                # tasks run concurrently
    max_workers: 1                # agent calls per round run concurrently
    ua_threshold: 0.45

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import os
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .engine import (
    INTEGRATE_MODES,
    Agent,
    AgentBackend,
    DebateEngine,
    HttpBackend,
    HttpBackendConfig,
    Scenario,
    ScriptedBackend,
    load_scenario,
)
from .model import AgentRole, HyperParams
from .roles import AGGREGATOR_ROLE, check_role_set, make_role, role_from_mapping

__all__ = ["ConfigError", "RunConfig", "apply_override", "build_backend", "build_engine", "engine_for_scenario",
           "load_config", "parse_config"]

BACKEND_KINDS = ("scripted", "http")
_HTTP_KEYS = {f for f in HttpBackendConfig.__dataclass_fields__} - {"api_key"} | {"api_key_env"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    params: HyperParams = field(default_factory=HyperParams)
    roles: tuple[AgentRole, ...] = ()
    critic_roles: tuple[AgentRole, ...] = ()
    aggregator_role: AgentRole | None = None
    backend_kind: str = "scripted"
    backend_settings: Mapping = field(default_factory=dict)
    integrate_mode: str = "auto"
    output_dir: Path = Path("runs")
    seed: int = 0
    parallelism: int = 1
    max_workers: int = 1
    ua_threshold: float | None = None

    def __post_init__(self):
        if self.backend_kind not in BACKEND_KINDS:
            raise ConfigError(f"backend kind must be one of {BACKEND_KINDS}, got {self.backend_kind!r}")
        settings = self.backend_settings
        if self.backend_kind == "scripted" and not settings.get("fixture"):
            raise ConfigError("scripted backend needs a 'fixture' path")
        if self.backend_kind == "http":
            missing = [k for k in ("base_url", "model") if not settings.get(k)]
            if missing:
                raise ConfigError(f"http backend needs {' and '.join(missing)}")
            unknown = set(settings) - _HTTP_KEYS
            if unknown:
                raise ConfigError(f"unknown http backend setting(s): {', '.join(sorted(unknown))}")
        if self.integrate_mode not in INTEGRATE_MODES:
            raise ConfigError(f"integrate_mode must be one of {INTEGRATE_MODES}")
        if self.integrate_mode == "delegated" and self.aggregator_role is None:
            raise ConfigError("delegated integration needs agents.aggregator enabled")
        if len(self.roles) != self.params.n_base:
            raise ConfigError(f"n_base is {self.params.n_base} but {len(self.roles)} base roles are configured")
        if len(self.critic_roles) != self.params.n_crit:
            raise ConfigError(f"n_crit is {self.params.n_crit} but {len(self.critic_roles)} critics are configured")
        try:
            check_role_set(self.roles, self.critic_roles)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        for name in ("parallelism", "max_workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")

    @property
    def effective_ua_threshold(self) -> float:
        return self.params.theta_u if self.ua_threshold is None else self.ua_threshold


def _roles(raw, category: str) -> tuple[AgentRole, ...]:
    out = []
    for item in raw or ():
        if isinstance(item, str):
            out.append(make_role(category, item))
        elif isinstance(item, Mapping):
            out.append(role_from_mapping({"category": category, **item}))
        else:
            raise ConfigError(f"bad {category} agent entry {item!r}")
    return tuple(out)


def _set_dotted(data: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = data
    for key in parts[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {dotted!r}: {key!r} is not a section")
    node[parts[-1]] = value


def apply_override(data: dict, assignment: str) -> None:
    """Apply one ``key=value`` override; bare hyperparameter names go to ``params``."""
    key, sep, raw = assignment.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    try:
        value = yaml.safe_load(raw) if raw.strip() else ""
    except yaml.YAMLError:
        value = raw
    if "." not in key and key in HyperParams.field_names():
        key = f"params.{key}"
    _set_dotted(data, key, value)


def parse_config(data: Mapping | None, base_dir: Path = Path("."), overrides: Sequence[str] = ()) -> RunConfig:
    data = dict(data or {})
    for assignment in overrides:
        apply_override(data, assignment)
    known = {"params", "agents", "integrate_mode", "backend", "output_dir", "seed", "parallelism", "max_workers",
             "ua_threshold"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    try:
        params = HyperParams.from_mapping(data.get("params"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad params: {exc}") from None

    agents = data.get("agents") or {}
    roles = _roles(agents.get("base", ["object_recognition", "scene_description", "ocr"]), "base")
    critics = _roles(agents.get("critics", ["fact_checker", "completeness_checker", "logic_checker"]), "critic")
    aggregator = agents.get("aggregator", False)
    aggregator_role = None
    if aggregator is True:
        aggregator_role = AGGREGATOR_ROLE
    elif isinstance(aggregator, Mapping):
        aggregator_role = make_role("aggregator", aggregator.get("specialty", "aggregator"),
                                    aggregator.get("prompt_template"))

    backend = dict(data.get("backend") or {"kind": "scripted"})
    kind = backend.pop("kind", "scripted")
    if kind == "scripted" and backend.get("fixture"):
        backend["fixture"] = str((base_dir / backend["fixture"]).resolve())

    def number(name, default, cast=int):
        try:
            return cast(data.get(name, default))
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be a number") from None

    try:
        return RunConfig(
            params=params,
            roles=roles,
            critic_roles=critics,
            aggregator_role=aggregator_role,
            backend_kind=kind,
            backend_settings=backend,
            integrate_mode=str(data.get("integrate_mode", "auto")),
            output_dir=(base_dir / str(data.get("output_dir", "runs"))),
            seed=number("seed", 0),
            parallelism=number("parallelism", 1),
            max_workers=number("max_workers", 1),
            ua_threshold=None if data.get("ua_threshold") is None else number("ua_threshold", None, float),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, overrides: Sequence[str] = ()) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from None
    if data is not None and not isinstance(data, Mapping):
        raise ConfigError(f"{path}: config must be a mapping")
    return parse_config(data, path.parent, overrides)


def build_backend(config: RunConfig) -> AgentBackend:
    settings = dict(config.backend_settings)
    if config.backend_kind == "scripted":
        return ScriptedBackend(load_scenario(settings["fixture"]))
    env = settings.pop("api_key_env", None)
    api_key = None
    if env:
        api_key = os.environ.get(env)
        if not api_key:
            raise ConfigError(f"environment variable {env} with the API token is not set")
    return HttpBackend(HttpBackendConfig(api_key=api_key, **settings))


def build_engine(config: RunConfig, backend: AgentBackend | None = None) -> DebateEngine:
    backend = backend or build_backend(config)
    return DebateEngine(
        agents=[Agent.of(r, backend) for r in config.roles],
        critics=[Agent.of(r, backend) for r in config.critic_roles],
        aggregator=None if config.aggregator_role is None else Agent.of(config.aggregator_role, backend),
        params=config.params,
        integrate_mode=config.integrate_mode,
        max_workers=config.max_workers,
    )


def engine_for_scenario(scenario: Scenario, params: HyperParams | None = None, **overrides) -> DebateEngine:
    """Engine whose agents all replay ``scenario``; its params overrides apply on top of ``params``."""
    base = params or HyperParams()
    merged = {**base.to_dict(), **scenario.params, **overrides}
    roles = [make_role("base", s) for s in scenario.base_specialties]
    critics = [make_role("critic", s) for s in scenario.critic_specialties]
    merged["n_base"], merged["n_crit"] = len(roles), len(critics)
    params = HyperParams.from_mapping(merged)
    backend = ScriptedBackend(scenario)
    return DebateEngine(
        agents=[Agent.of(r, backend) for r in roles],
        critics=[Agent.of(r, backend) for r in critics],
        aggregator=Agent.of(AGGREGATOR_ROLE, backend) if scenario.aggregator else None,
        params=params,
        integrate_mode=scenario.integrate_mode,
    )


def with_params(config: RunConfig, **changes) -> RunConfig:
    return replace(config, params=config.params.with_overrides(**changes))
