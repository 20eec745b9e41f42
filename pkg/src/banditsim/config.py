"""Experiment configuration: YAML schema, presets, and strict validation.

A config file is a YAML mapping. Unknown keys are rejected with the
offending dotted path. The ``preset`` key pulls in a named parameter set
(see PRESETS); every other key in the file then overrides the preset's
value, with nested mappings merged key by key and lists replaced whole.

Top-level schema::

    preset: onoff | sudden-drift | seasonal-drift | delay-stationary | delay-seasonal
    horizon: <int >= 1>            # rounds per run
    replications: <int >= 1>
    master_seed: <int>
    rolling_window: <int >= 1>     # window for the rolling-reward curves
    output_dir: <path>             # may instead be given on the CLI
    environment: {n_actions, dim_context, coefficient_scale}
    drifter: {interval, transition_period, transition_type, seasonal,
              base_coefficient_weight}
    delay: {mode, scale, min_scale, max_scale}       # one sampler for all runs
    delay_variants:                                  # or several labelled ones
      - {label, mode: none | unbiased | reward_dependent, scale, min_scale, max_scale}
    policies:                      # roster; all run on the same rounds
      - {name: random | egreedy | bts | linucb | lints, label, <hyperparams>}
    control_policies:              # extra runs on a drift-free twin environment
      - {name, label, <hyperparams>}
    onoff: {train_rounds, logging_policy}            # off-policy comparison
    ipw: {use_true_propensities, weight_clip, propensity_floor,
          learning_rate, epochs, batch_size}

Per-replication seeds are always derived from (master_seed, replication,
stream role), so seed fields inside sections are not part of the schema.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .delay import DelayConfig
from .drift import TRANSITION_TYPES, DrifterConfig
from .errors import ConfigError
from .offpolicy import IPWConfig
from .policies import make_policy

__all__ = [
    "EnvSettings",
    "PolicySpec",
    "DelayVariant",
    "OnOffSettings",
    "ExperimentConfig",
    "PRESETS",
    "load_config",
    "resolve_config",
    "output_labels",
]


@dataclass(frozen=True)
class EnvSettings:
    n_actions: int = 10
    dim_context: int = 5
    coefficient_scale: float | None = None


@dataclass(frozen=True)
class PolicySpec:
    name: str
    label: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DelayVariant:
    label: str
    delay: DelayConfig | None


@dataclass(frozen=True)
class OnOffSettings:
    train_rounds: int
    logging_policy: str


@dataclass
class ExperimentConfig:
    horizon: int
    policies: list[PolicySpec]
    environment: EnvSettings = EnvSettings()
    replications: int = 1
    master_seed: int = 0
    rolling_window: int = 500
    output_dir: str | None = None
    preset: str | None = None
    drifter: DrifterConfig | None = None
    delay_variants: list[DelayVariant] = field(
        default_factory=lambda: [DelayVariant("", None)]
    )
    control_policies: list[PolicySpec] = field(default_factory=list)
    onoff: OnOffSettings | None = None
    ipw: IPWConfig | None = None
    raw: dict = field(default_factory=dict, repr=False)


_ENV_DEFAULTS = {"n_actions": 10, "dim_context": 5}

_FULL_ROSTER = [
    {"name": "random"},
    {"name": "egreedy", "epsilon": 0.1},
    {"name": "bts"},
    {"name": "linucb"},
    {"name": "lints"},
]

_DRIFT_ROSTER = [
    {"name": "egreedy", "epsilon": 0.1},
    {"name": "bts"},
    {"name": "linucb"},
    {"name": "lints"},
]

_DELAY_VARIANTS = [
    {"label": "no_delay", "mode": "none"},
    {"label": "unbiased", "mode": "unbiased", "scale": 1000.0},
    {
        "label": "reward_dependent",
        "mode": "reward_dependent",
        "min_scale": 900.0,
        "max_scale": 1000.0,
    },
]

PRESETS: dict[str, dict] = {
    # On-policy bandits vs an IPW policy learned from the egreedy log:
    # first half of the horizon is the training period, second half the
    # evaluation period (bandits keep learning, the IPW policy is frozen).
    "onoff": {
        "horizon": 10_000,
        "replications": 20,
        "rolling_window": 500,
        "environment": dict(_ENV_DEFAULTS),
        "policies": copy.deepcopy(_FULL_ROSTER),
        "onoff": {"logging_policy": "egreedy"},
        "ipw": {},
    },
    # One abrupt concept change: the shift starts at round 20,000 and is
    # complete at 25,000; the base coefficients keep weight 0.3 throughout.
    "sudden-drift": {
        "horizon": 50_000,
        "replications": 20,
        "rolling_window": 500,
        "environment": dict(_ENV_DEFAULTS),
        "drifter": {
            "interval": 25_000,
            "transition_period": 5_000,
            "transition_type": "linear",
            "seasonal": False,
            "base_coefficient_weight": 0.3,
        },
        "policies": copy.deepcopy(_DRIFT_ROSTER),
        "control_policies": [{"name": "bts"}, {"name": "random"}],
    },
    # Two concepts alternating every 5,000 rounds.
    "seasonal-drift": {
        "horizon": 50_000,
        "replications": 20,
        "rolling_window": 500,
        "environment": dict(_ENV_DEFAULTS),
        "drifter": {
            "interval": 5_000,
            "transition_period": 0,
            "transition_type": "linear",
            "seasonal": True,
            "base_coefficient_weight": 0.3,
        },
        "policies": copy.deepcopy(_DRIFT_ROSTER),
        "control_policies": [{"name": "bts"}, {"name": "random"}],
    },
    # Epsilon-greedy under no delay, unbiased exponential delay (mean 1000
    # rounds), and reward-dependent delay interpolating scales 900/1000.
    "delay-stationary": {
        "horizon": 20_000,
        "replications": 100,
        "rolling_window": 500,
        "environment": dict(_ENV_DEFAULTS),
        "policies": [{"name": "egreedy", "epsilon": 0.1}],
        "delay_variants": copy.deepcopy(_DELAY_VARIANTS),
    },
    # Same delay comparison inside a seasonal environment.
    "delay-seasonal": {
        "horizon": 20_000,
        "replications": 100,
        "rolling_window": 500,
        "environment": dict(_ENV_DEFAULTS),
        "drifter": {
            "interval": 5_000,
            "transition_period": 0,
            "transition_type": "linear",
            "seasonal": True,
            "base_coefficient_weight": 0.3,
        },
        "policies": [{"name": "egreedy", "epsilon": 0.1}],
        "delay_variants": copy.deepcopy(_DELAY_VARIANTS),
    },
}


def _as_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"'{path}' must be a mapping, got {type(value).__name__}")
    return value


def _check_keys(mapping: dict, allowed: set[str], path: str) -> None:
    for key in mapping:
        if key not in allowed:
            where = f"{path}.{key}" if path else str(key)
            raise ConfigError(f"unknown key '{where}'")


def _get(mapping: dict, key: str, path: str, default=None, required: bool = False):
    if key not in mapping or mapping[key] is None:
        if required:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"missing required key '{where}'")
        return default
    return mapping[key]


def _as_int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{path}' must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"'{path}' must be >= {minimum}, got {value}")
    return value


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{path}' must be a number, got {value!r}")
    return float(value)


def _as_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"'{path}' must be a boolean, got {value!r}")
    return value


def _as_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"'{path}' must be a string, got {value!r}")
    return value


def _deep_merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _parse_environment(section, path: str) -> EnvSettings:
    section = _as_mapping(section, path)
    _check_keys(section, {"n_actions", "dim_context", "coefficient_scale"}, path)
    n_actions = _as_int(_get(section, "n_actions", path, 10), f"{path}.n_actions", 2)
    dim_context = _as_int(_get(section, "dim_context", path, 5), f"{path}.dim_context", 1)
    scale = _get(section, "coefficient_scale", path)
    if scale is not None:
        scale = _as_float(scale, f"{path}.coefficient_scale")
        if not scale > 0:
            raise ConfigError(f"'{path}.coefficient_scale' must be > 0, got {scale}")
    return EnvSettings(n_actions, dim_context, scale)


def _parse_drifter(section, path: str) -> DrifterConfig:
    section = _as_mapping(section, path)
    allowed = {
        "interval",
        "transition_period",
        "transition_type",
        "seasonal",
        "base_coefficient_weight",
    }
    _check_keys(section, allowed, path)
    try:
        return DrifterConfig(
            interval=_as_int(_get(section, "interval", path, required=True), f"{path}.interval", 1),
            transition_period=_as_int(
                _get(section, "transition_period", path, 0), f"{path}.transition_period", 0
            ),
            transition_type=_as_str(
                _get(section, "transition_type", path, "linear"), f"{path}.transition_type"
            ),
            seasonal=_as_bool(_get(section, "seasonal", path, False), f"{path}.seasonal"),
            base_coefficient_weight=_as_float(
                _get(section, "base_coefficient_weight", path, 0.0),
                f"{path}.base_coefficient_weight",
            ),
        )
    except ConfigError as exc:
        raise ConfigError(f"in '{path}': {exc}") from None


def _parse_delay(section, path: str, allow_none_mode: bool) -> DelayConfig | None:
    section = _as_mapping(section, path)
    allowed = {"mode", "scale", "min_scale", "max_scale"}
    if allow_none_mode:
        allowed = allowed | {"label"}
    _check_keys(section, allowed, path)
    mode = _as_str(_get(section, "mode", path, required=True), f"{path}.mode")
    if mode == "none":
        if not allow_none_mode:
            raise ConfigError(f"'{path}.mode' cannot be 'none'; omit the delay section instead")
        extras = set(section) - {"mode", "label"}
        if extras:
            raise ConfigError(f"'{path}': mode 'none' takes no scales, got {sorted(extras)}")
        return None
    kwargs = {}
    for key in ("scale", "min_scale", "max_scale"):
        if section.get(key) is not None:
            kwargs[key] = _as_float(section[key], f"{path}.{key}")
    try:
        return DelayConfig(mode=mode, **kwargs)
    except ConfigError as exc:
        raise ConfigError(f"in '{path}': {exc}") from None


def _parse_policy(entry, path: str, env: EnvSettings) -> PolicySpec:
    entry = _as_mapping(entry, path)
    name = _as_str(_get(entry, "name", path, required=True), f"{path}.name")
    label = _as_str(_get(entry, "label", path, name), f"{path}.label")
    params = {k: v for k, v in entry.items() if k not in ("name", "label")}
    try:
        make_policy(name, env.n_actions, env.dim_context, params)
    except ConfigError as exc:
        raise ConfigError(f"in '{path}': {exc}") from None
    return PolicySpec(name=name, label=label, params=params)


def _parse_policy_list(section, path: str, env: EnvSettings) -> list[PolicySpec]:
    if not isinstance(section, list) or not section:
        raise ConfigError(f"'{path}' must be a non-empty list of policy entries")
    specs = [_parse_policy(entry, f"{path}[{i}]", env) for i, entry in enumerate(section)]
    labels = [spec.label for spec in specs]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"duplicate policy labels in '{path}': {labels}")
    return specs


def _parse_ipw(section, path: str) -> IPWConfig:
    section = _as_mapping(section, path)
    allowed = {
        "use_true_propensities",
        "weight_clip",
        "propensity_floor",
        "learning_rate",
        "epochs",
        "batch_size",
    }
    _check_keys(section, allowed, path)
    kwargs = {}
    if "use_true_propensities" in section:
        kwargs["use_true_propensities"] = _as_bool(
            section["use_true_propensities"], f"{path}.use_true_propensities"
        )
    for key in ("weight_clip", "propensity_floor", "learning_rate"):
        if section.get(key) is not None:
            kwargs[key] = _as_float(section[key], f"{path}.{key}")
    for key in ("epochs", "batch_size"):
        if section.get(key) is not None:
            kwargs[key] = _as_int(section[key], f"{path}.{key}", 1)
    try:
        return IPWConfig(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"in '{path}': {exc}") from None


_TOP_KEYS = {
    "preset",
    "horizon",
    "replications",
    "master_seed",
    "rolling_window",
    "output_dir",
    "environment",
    "drifter",
    "delay",
    "delay_variants",
    "policies",
    "control_policies",
    "onoff",
    "ipw",
}


def resolve_config(raw: dict) -> ExperimentConfig:
    """Apply preset defaults, validate every key, and build the config."""
    raw = _as_mapping(raw, "config")
    _check_keys(raw, _TOP_KEYS, "")
    preset = _get(raw, "preset", "")
    if preset is not None:
        preset = _as_str(preset, "preset")
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
        merged = _deep_merge(copy.deepcopy(PRESETS[preset]), raw)
    else:
        merged = copy.deepcopy(raw)

    env = _parse_environment(_get(merged, "environment", "", {}), "environment")
    horizon = _as_int(_get(merged, "horizon", "", required=True), "horizon", 1)
    replications = _as_int(_get(merged, "replications", "", 1), "replications", 1)
    master_seed = _as_int(_get(merged, "master_seed", "", 0), "master_seed")
    rolling_window = _as_int(_get(merged, "rolling_window", "", 500), "rolling_window", 1)
    output_dir = _get(merged, "output_dir", "")
    if output_dir is not None:
        output_dir = _as_str(output_dir, "output_dir")

    drifter = None
    if merged.get("drifter") is not None:
        drifter = _parse_drifter(merged["drifter"], "drifter")

    if merged.get("delay") is not None and merged.get("delay_variants") is not None:
        raise ConfigError("'delay' and 'delay_variants' are mutually exclusive")
    if merged.get("delay") is not None:
        variants = [DelayVariant("", _parse_delay(merged["delay"], "delay", False))]
    elif merged.get("delay_variants") is not None:
        entries = merged["delay_variants"]
        if not isinstance(entries, list) or not entries:
            raise ConfigError("'delay_variants' must be a non-empty list")
        variants = []
        for i, entry in enumerate(entries):
            path = f"delay_variants[{i}]"
            entry = _as_mapping(entry, path)
            label = _as_str(_get(entry, "label", path, required=True), f"{path}.label")
            variants.append(DelayVariant(label, _parse_delay(entry, path, True)))
        labels = [v.label for v in variants]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate labels in 'delay_variants': {labels}")
    else:
        variants = [DelayVariant("", None)]

    policies = _parse_policy_list(_get(merged, "policies", "", required=True), "policies", env)

    control_policies: list[PolicySpec] = []
    if merged.get("control_policies") is not None:
        if drifter is None:
            raise ConfigError(
                "'control_policies' requires a 'drifter' section (controls run on a drift-free twin)"
            )
        control_policies = _parse_policy_list(merged["control_policies"], "control_policies", env)

    onoff = None
    if merged.get("onoff") is not None:
        section = _as_mapping(merged["onoff"], "onoff")
        _check_keys(section, {"train_rounds", "logging_policy"}, "onoff")
        if drifter is not None:
            raise ConfigError("'onoff' experiments do not support a 'drifter' section")
        if any(v.delay is not None for v in variants):
            raise ConfigError("'onoff' experiments do not support delay sections")
        train_rounds = _get(section, "train_rounds", "onoff", horizon // 2)
        train_rounds = _as_int(train_rounds, "onoff.train_rounds", 1)
        if train_rounds >= horizon:
            raise ConfigError(
                f"'onoff.train_rounds' must be < horizon ({horizon}), got {train_rounds}"
            )
        logging_policy = _as_str(
            _get(section, "logging_policy", "onoff", required=True), "onoff.logging_policy"
        )
        roster = [spec.label for spec in policies]
        if logging_policy not in roster:
            raise ConfigError(
                f"'onoff.logging_policy' {logging_policy!r} is not in the policy roster {roster}"
            )
        onoff = OnOffSettings(train_rounds=train_rounds, logging_policy=logging_policy)

    ipw = None
    if merged.get("ipw") is not None:
        if onoff is None:
            raise ConfigError("'ipw' settings are only used with an 'onoff' section")
        ipw = _parse_ipw(merged["ipw"], "ipw")
    if onoff is not None and ipw is None:
        ipw = IPWConfig()

    config = ExperimentConfig(
        horizon=horizon,
        policies=policies,
        environment=env,
        replications=replications,
        master_seed=master_seed,
        rolling_window=rolling_window,
        output_dir=output_dir,
        preset=preset,
        drifter=drifter,
        delay_variants=variants,
        control_policies=control_policies,
        onoff=onoff,
        ipw=ipw,
        raw=merged,
    )
    labels = output_labels(config)
    if len(set(labels)) != len(labels):
        raise ConfigError(f"run labels collide: {labels}")
    return config


def output_labels(config: ExperimentConfig) -> list[str]:
    """Run labels in the order they appear in the output files."""
    labels = []
    for variant in config.delay_variants:
        suffix = f"_{variant.label}" if variant.label else ""
        for spec in config.policies:
            labels.append(spec.label + suffix)
    for spec in config.control_policies:
        labels.append(f"{spec.label}_stationary")
    if config.onoff is not None:
        labels.append("ipw")
    return labels


def load_config(path: str | Path) -> ExperimentConfig:
    """Load and resolve a YAML experiment config from disk."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if raw is None:
        raise ConfigError(f"config file {path} is empty")
    return resolve_config(raw)
