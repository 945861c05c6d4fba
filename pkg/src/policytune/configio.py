"""TOML run-configuration files.

Flat key/value documents with this exact vocabulary (all optional unless a
command says otherwise):

    env                 environment name ("mountain_car" | "pendulum" | "corridor")
    n_deltas            perturbations per update (default 64)
    n_updates           update steps (default 200)
    alpha_start         step-size schedule endpoints (default 0.02 -> 0.002)
    alpha_end
    sigma_start         exploration-noise schedule endpoints (default 0.025 -> 0.0025)
    sigma_end
    master_seed         64-bit seed driving the whole run (default 0)
    reward_mode         "raw" | "dim_ratio" | "dim_product"
    mesh_scales         ladder rungs for dimension rewards (default 4)
    mesh_base           coarsest cell edge (default 0.5; ratio is fixed at 0.5)
    max_episode_steps   rollout cap (default: environment's own limit)

    hidden_sizes        pretrain only: hidden layer widths (default [32, 32])
    normalizer_samples  pretrain only: random rollouts for statistics (default 100)
    quality             pretrain only: "weak" | "medium"

Unknown keys are rejected.
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .meshdim import REWARD_MODE_RAW, MeshLadder
from .pretrain import PretrainConfig
from .search import LinearSchedule, SearchConfig

_SEARCH_KEYS = {
    "env", "n_deltas", "n_updates", "alpha_start", "alpha_end", "sigma_start",
    "sigma_end", "master_seed", "reward_mode", "mesh_scales", "mesh_base",
    "max_episode_steps",
}
_PRETRAIN_KEYS = {"hidden_sizes", "normalizer_samples", "quality"}


class ConfigError(ValueError):
    pass


def read_config_dict(path, allow_pretrain_keys: bool = False) -> dict:
    allowed = _SEARCH_KEYS | (_PRETRAIN_KEYS if allow_pretrain_keys else set())
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return doc


def _schedule(doc, name, default: LinearSchedule) -> LinearSchedule:
    return LinearSchedule(
        float(doc.get(f"{name}_start", default.start)),
        float(doc.get(f"{name}_end", default.end)),
    )


def search_config_from_dict(doc: dict, reward_mode_override: str | None = None) -> SearchConfig:
    defaults = SearchConfig()
    reward_mode = reward_mode_override or doc.get("reward_mode", REWARD_MODE_RAW)
    dim_config = None
    if reward_mode != REWARD_MODE_RAW:
        dim_config = MeshLadder(
            base_scale=float(doc.get("mesh_base", MeshLadder.base_scale)),
            ratio=MeshLadder.ratio,
            num_scales=int(doc.get("mesh_scales", MeshLadder.num_scales)),
        )
    try:
        return SearchConfig(
            n_deltas=int(doc.get("n_deltas", defaults.n_deltas)),
            n_updates=int(doc.get("n_updates", defaults.n_updates)),
            alpha=_schedule(doc, "alpha", defaults.alpha),
            sigma=_schedule(doc, "sigma", defaults.sigma),
            master_seed=int(doc.get("master_seed", defaults.master_seed)),
            reward_mode=reward_mode,
            dim_config=dim_config,
            max_episode_steps=(int(doc["max_episode_steps"])
                               if "max_episode_steps" in doc else None),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def pretrain_config_from_dict(doc: dict, master_seed: int | None = None) -> PretrainConfig:
    defaults = PretrainConfig()
    try:
        return PretrainConfig(
            hidden_sizes=tuple(int(h) for h in doc.get("hidden_sizes", defaults.hidden_sizes)),
            normalizer_samples=int(doc.get("normalizer_samples", defaults.normalizer_samples)),
            quality=doc.get("quality", defaults.quality),
            n_deltas=int(doc.get("n_deltas", defaults.n_deltas)),
            alpha=_schedule(doc, "alpha", defaults.alpha),
            sigma=_schedule(doc, "sigma", defaults.sigma),
            master_seed=int(master_seed if master_seed is not None
                            else doc.get("master_seed", defaults.master_seed)),
            max_episode_steps=(int(doc["max_episode_steps"])
                               if "max_episode_steps" in doc else None),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
