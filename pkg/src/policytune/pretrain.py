"""Deliberately imperfect baseline policies to fine-tune from.

The experiments need a starting point that is better than random but far
from converged. Pretraining here is just the same random search on a
truncated budget (quality "weak" = 20 updates, "medium" = 60), run from a
small deterministic weight init, after fitting the observation normalizer
on random-action rollouts. The normalizer is frozen from then on: nothing
downstream ever updates it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envsim import Env, make_env
from .meshdim import REWARD_MODE_RAW
from .policy import DEFAULT_CLIP, DEFAULT_EPS, MlpPolicy, ObservationNormalizer
from .rng import STREAM_INIT, STREAM_NORM_ACT, STREAM_NORM_ENV, Prng, derive_seed
from .search import DEFAULT_ALPHA, DEFAULT_SIGMA, LinearSchedule, SearchConfig, finetune

QUALITY_UPDATES = {"weak": 20, "medium": 60}


@dataclass
class PretrainConfig:
    """Search settings plus architecture and normalizer-fit choices.

    `quality` replaces an explicit update count: it maps to the truncated
    budgets above, with the alpha/sigma schedules spanning that budget.
    """

    hidden_sizes: tuple = (32, 32)
    normalizer_samples: int = 100
    quality: str = "weak"
    n_deltas: int = 64
    alpha: LinearSchedule = DEFAULT_ALPHA
    sigma: LinearSchedule = DEFAULT_SIGMA
    master_seed: int = 0
    reward_mode: str = REWARD_MODE_RAW
    max_episode_steps: int | None = None

    def __post_init__(self):
        if self.quality not in QUALITY_UPDATES:
            raise ValueError(f"quality must be one of {sorted(QUALITY_UPDATES)}")
        if self.normalizer_samples < 1:
            raise ValueError("normalizer_samples must be >= 1")
        if any(h < 1 for h in self.hidden_sizes):
            raise ValueError("hidden layer sizes must be >= 1")

    def search_config(self) -> SearchConfig:
        return SearchConfig(
            n_deltas=self.n_deltas,
            n_updates=QUALITY_UPDATES[self.quality],
            alpha=self.alpha,
            sigma=self.sigma,
            master_seed=self.master_seed,
            reward_mode=self.reward_mode,
            max_episode_steps=self.max_episode_steps,
        )


def fit_normalizer(env_name: str, random_policy_samples: int, seed: int,
                   max_steps: int | None = None) -> ObservationNormalizer:
    """Observation statistics from random-action rollouts.

    Collects every observation returned by reset() and step() over
    `random_policy_samples` episodes with uniformly random legal actions,
    then takes the per-coordinate mean and population variance (ddof=0).
    clip is fixed at 10, eps at 1e-8.
    """
    if random_policy_samples < 1:
        raise ValueError("need at least one sampling rollout")
    env = make_env(env_name)
    cap = env.spec.max_steps if max_steps is None else max_steps
    low, high = env.action_low, env.action_high
    collected = []
    for j in range(random_policy_samples):
        obs = env.reset(derive_seed(seed, STREAM_NORM_ENV, j))
        actions = Prng(derive_seed(seed, STREAM_NORM_ACT, j))
        collected.append(obs)
        for _ in range(cap):
            a = low + (high - low) * actions.uniform(env.spec.act_dim)
            result = env.step(a)
            collected.append(result.observation)
            if result.done:
                break
    stacked = np.array(collected)
    return ObservationNormalizer(stacked.mean(axis=0), stacked.var(axis=0),
                                 DEFAULT_CLIP, DEFAULT_EPS)


def init_policy(env: Env, hidden_sizes, normalizer: ObservationNormalizer,
                seed: int) -> MlpPolicy:
    """Small-scale deterministic init: W ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)), b = 0.

    Layers draw from one stream in order, weight matrices row-major.
    """
    stream = Prng(derive_seed(seed, STREAM_INIT, 0))
    dims = [env.spec.obs_dim, *hidden_sizes, env.spec.act_dim]
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        scale = 1.0 / np.sqrt(fan_in)
        w = stream.uniform_range(-scale, scale, fan_out * fan_in).reshape(fan_out, fan_in)
        layers.append((w, np.zeros(fan_out)))
    return MlpPolicy(layers, normalizer, env.action_low, env.action_high)


def pretrain(env_name: str, config: PretrainConfig, workers: int = 1) -> MlpPolicy:
    """Produce an intentionally under-trained baseline policy for `env_name`."""
    env = make_env(env_name)
    normalizer = fit_normalizer(env_name, config.normalizer_samples, config.master_seed,
                                config.max_episode_steps)
    start = init_policy(env, config.hidden_sizes, normalizer, config.master_seed)
    policy, _ = finetune(start, env_name, config.search_config(), workers=workers)
    return policy
