"""Experiment configuration: profiles, file loading, overrides, validation.

Every run directory gets a copy of the fully resolved config so that any
artifact (dataset, checkpoint, decoder, evaluation output) can be reproduced
from its `config.json` alone.
"""

from __future__ import annotations

import copy
import json
import os
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    pass


# Profile "paper" mirrors the published training setup; profile "desk" is a
# scaled-down configuration meant to train on a laptop CPU in minutes.
_PAPER: dict[str, Any] = {
    "world": {
        "extent_m": 24.0,
        "cell_m": 0.25,
        "corridor_width_m": 2.0,
        "streets_x": [2, 4],
        "streets_y": [2, 4],
        "edge_keep_prob": 0.85,
        "obstacle_zones": 3,
        "obstacle_fill": 0.45,
        "margin_m": 2.0,
        "image_size": 224,
        "fov_deg": 90.0,
        "max_range_m": 8.0,
        "topo_size": 64,
        "topo_window_m": 12.0,
        "topo_road_m": 1.2,
        "dt": 0.1,
        "v_max": 1.2,
        "omega_max": 1.6,
        "robot_radius_m": 0.2,
        "cruise_throttle": 0.6,
        "steer_slowdown": 0.5,
        "steer_saturation_deg": 60.0,
        "lookahead_m": 1.4,
        "avoid_range_m": 2.0,
        "avoid_gain_m": 1.1,
        "goal_radius_m": 0.6,
    },
    "dataset": {
        "worlds": 12,
        "seed": 0,
        "episodes_per_world": 6,
        "max_steps": 360,
        "min_route_edges": 3,
        "exploration_noise": 0.05,
        "val_fraction": 0.2,
        "tag_intersection_radius_m": 1.6,
        "tag_obstacle_radius_m": 2.4,
        "straight_angle_deg": 30.0,
        "workers": 1,
    },
    "network": {
        "variant": "monet",
        "image_size": 224,
        "image_channels": [16, 32, 64, 64, 64],
        "map_size": 64,
        "map_channels": [8, 16, 32, 32, 64, 64],
        "token_grid": 6,
        "attn_dim": 64,
        "attn_heads": 4,
        "mlp_hidden": 128,
        "decision_dim": 64,
        "seed": 0,
    },
    "loss": {
        "lambda_throttle": 0.5,
        "kappa": 0.5,
        "lambda_lgc": 5e-4,
    },
    "training": {
        "batch_size": 512,
        "total_iterations": 650_000,
        "learning_rate": 3e-4,
        "schedule": "inverse_time",
        "schedule_factor": 3e-4,
        "optimizer": "adam",
        "seed": 0,
        "max_shift_px": 22,
        "shift_gain": 0.0066,
        "log_interval": 50,
        "eval_interval": 500,
        "checkpoint_interval": 1000,
        "val_batch_cap": 1024,
    },
    "decoder": {
        "regularization": 1.0,
        "folds": 3,
        "merge_straight": True,
        "per_class_cap": 400,
        "seed": 0,
        "split": "val",
    },
    "eval": {
        "episodes": 20,
        "max_steps": 500,
        "transition_window": 10,
        "per_class_cap": 300,
        "vector": "h_d",
        "seed": 0,
    },
}

_DESK_OVERRIDES: dict[str, Any] = {
    "world": {
        "extent_m": 18.0,
        "image_size": 96,
        "max_range_m": 7.0,
        "topo_window_m": 10.0,
    },
    "dataset": {
        "worlds": 6,
        "episodes_per_world": 6,
        "max_steps": 300,
    },
    "network": {
        "image_size": 96,
        "image_channels": [8, 16, 32, 64],
        "map_channels": [8, 16, 32, 32, 64, 64],
        "mlp_hidden": 64,
    },
    "loss": {
        "lambda_lgc": 0.05,
    },
    "training": {
        "batch_size": 64,
        "total_iterations": 2000,
        "max_shift_px": 10,
        "shift_gain": 0.015,
        "eval_interval": 250,
        "checkpoint_interval": 500,
        "val_batch_cap": 512,
    },
}

PROFILES = ("paper", "desk")

VARIANTS = ("monet", "monet-mul", "monet-iden", "monet-nolgc", "vitnet")


def _deep_merge(base: dict, extra: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key: {here}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{here} must be a section, got {type(value).__name__}")
            out[key] = _deep_merge(base[key], value, here)
        else:
            out[key] = copy.deepcopy(value)
    return out


def default_config(profile: str = "desk") -> dict[str, Any]:
    """Return the full default config for a named profile."""
    if profile == "paper":
        return copy.deepcopy(_PAPER)
    if profile == "desk":
        return _deep_merge(_PAPER, _DESK_OVERRIDES)
    raise ConfigError(f"unknown profile {profile!r}; expected one of {PROFILES}")


def _parse_override_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(cfg: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    """Apply `section.key=value` overrides (values parsed as JSON when possible)."""
    out = copy.deepcopy(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        dotted, raw = item.split("=", 1)
        keys = dotted.strip().split(".")
        node = out
        for key in keys[:-1]:
            if key not in node or not isinstance(node[key], dict):
                raise ConfigError(f"unknown config section in override: {dotted}")
            node = node[key]
        if keys[-1] not in node:
            raise ConfigError(f"unknown config key in override: {dotted}")
        node[keys[-1]] = _parse_override_value(raw.strip())
    return out


def resolve_config(
    profile: str = "desk",
    config_path: str | os.PathLike | None = None,
    overrides: list[str] | None = None,
) -> dict[str, Any]:
    """Build the resolved config: profile defaults <- config file <- flag overrides."""
    cfg = default_config(profile)
    if config_path is not None:
        with open(config_path, "r", encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        file_profile = file_cfg.pop("profile", None)
        if file_profile is not None and file_profile != profile:
            cfg = default_config(file_profile)
        cfg = _deep_merge(cfg, file_cfg)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict[str, Any]) -> None:
    world, net, loss, training = cfg["world"], cfg["network"], cfg["loss"], cfg["training"]
    if world["corridor_width_m"] < 3 * world["cell_m"]:
        raise ConfigError("corridor width below 3 occupancy cells degenerates rendering")
    if net["variant"] not in VARIANTS:
        raise ConfigError(f"unknown variant {net['variant']!r}; expected one of {VARIANTS}")
    if not 0.0 <= loss["lambda_throttle"] <= 1.0:
        raise ConfigError("lambda_throttle must lie in [0, 1]")
    if not -1.0 <= loss["kappa"] <= 1.0:
        raise ConfigError("kappa must lie in [-1, 1]")
    if loss["lambda_lgc"] < 0.0:
        raise ConfigError("lambda_lgc must be >= 0")
    if training["batch_size"] < 2:
        raise ConfigError("batch_size must be >= 2 (contrastive pairing needs pairs)")
    if net["image_size"] != world["image_size"]:
        raise ConfigError("network.image_size must match world.image_size")


def seed_from_env(explicit: int | None) -> int:
    """Resolve the global seed: explicit flag wins, then MONET_SEED, then 0."""
    if explicit is not None:
        return explicit
    env = os.environ.get("MONET_SEED")
    return int(env) if env else 0


def dump_config(cfg: dict[str, Any], path: str | os.PathLike) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_fingerprint(cfg: dict[str, Any]) -> str:
    import hashlib

    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
