"""Direct random search over policy parameters with antithetic sampling.

Each update samples n Gaussian perturbations delta_i ~ N(0, sigma_k^2) of
the flat parameter vector, rolls out theta + delta_i and theta - delta_i
with a shared episode seed per pair, and ascends the return-weighted
perturbation directions with the step normalized by the standard deviation
of the batch's returns:

    theta' = theta + alpha_k / (n sigma_R) * sum_i (R+_i - R-_i) d_i

where d_i = delta_i / sigma_k are the unit-variance directions (the update
convention this search inherits; the noise scale enters through the
perturbations only) and sigma_R is the sample standard deviation of all 2n
returns pooled. When a dimension reward is active, the shaped returns are
what enter both the sum and sigma_R. alpha and sigma follow linear
schedules over the update budget.

Determinism: deltas for update k come from the stream seeded with
derive_seed(master_seed, k, STREAM_DELTAS); the episode seed for pair i of
update k is derive_seed(master_seed, k, i), shared by both pair members.
Given (initial policy, env, config), `finetune` is reproducible bit for bit
at any worker count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .envsim import NEGATIVE_RETURNS, make_env
from .meshdim import DEFAULT_LADDER, REWARD_MODE_DIM_RATIO, REWARD_MODE_RAW, REWARD_MODES, MeshLadder
from .policy import MlpPolicy, flatten, unflatten
from .rng import STREAM_DELTAS, Prng, derive_seed
from .rollout import PairEvaluator

SIGMA_R_EPSILON = 1e-8


@dataclass(frozen=True)
class LinearSchedule:
    """value(k, K) interpolates start -> end linearly over K updates.

    Endpoints are returned exactly: value(0, K) == start and
    value(K-1, K) == end, with no float drift. K == 1 returns start.
    """

    start: float
    end: float

    def value(self, update_index: int, n_updates: int) -> float:
        last = n_updates - 1
        if update_index <= 0 or last <= 0:
            return self.start
        if update_index >= last:
            return self.end
        return self.start + (self.end - self.start) * (update_index / last)


DEFAULT_ALPHA = LinearSchedule(0.02, 0.002)
DEFAULT_SIGMA = LinearSchedule(0.025, 0.0025)


@dataclass
class SearchConfig:
    """Hyper-parameters of the search; defaults are the ones used throughout."""

    n_deltas: int = 64
    n_updates: int = 200
    alpha: LinearSchedule = DEFAULT_ALPHA
    sigma: LinearSchedule = DEFAULT_SIGMA
    master_seed: int = 0
    reward_mode: str = REWARD_MODE_RAW
    dim_config: Optional[MeshLadder] = None  # present iff reward_mode != raw
    max_episode_steps: Optional[int] = None  # None -> environment default

    def __post_init__(self):
        if self.n_deltas < 1:
            raise ValueError("n_deltas must be >= 1")
        if self.n_updates < 0:
            raise ValueError("n_updates must be >= 0")
        for sched, name in ((self.alpha, "alpha"), (self.sigma, "sigma")):
            if not (sched.start > 0.0 and sched.end > 0.0):
                raise ValueError(f"{name} schedule must stay strictly positive")
        if self.reward_mode not in REWARD_MODES:
            raise ValueError(f"unknown reward_mode {self.reward_mode!r}")
        if self.reward_mode == REWARD_MODE_RAW:
            if self.dim_config is not None:
                raise ValueError("dim_config is only meaningful with a dimension reward mode")
        elif self.dim_config is None:
            self.dim_config = DEFAULT_LADDER

    def shaping(self):
        if self.reward_mode == REWARD_MODE_RAW:
            return None
        return (self.reward_mode, self.dim_config)


@dataclass
class UpdateRecord:
    update_index: int
    alpha_used: float
    sigma_used: float
    returns_plus: np.ndarray
    returns_minus: np.ndarray
    sigma_r: float
    theta_norm_after: float

    def progress_dict(self) -> dict:
        """Compact per-update summary for JSONL streaming."""
        both = np.concatenate([self.returns_plus, self.returns_minus])
        return {
            "update_index": self.update_index,
            "mean_return": float(both.mean()),
            "sigma_r": self.sigma_r,
            "alpha": self.alpha_used,
            "sigma": self.sigma_used,
        }


def sample_deltas(dim: int, n: int, sigma: float, stream: Prng) -> np.ndarray:
    """(n, dim) perturbations, entries i.i.d. N(0, sigma^2), from `stream`."""
    if dim < 1 or n < 1:
        raise ValueError("dim and n must be >= 1")
    if not sigma > 0.0:
        raise ValueError("sigma must be positive")
    return stream.gaussian(n * dim).reshape(n, dim) * sigma


def pooled_return_std(returns_plus: np.ndarray, returns_minus: np.ndarray) -> float:
    """Sample standard deviation (denominator 2n-1) of all 2n returns pooled."""
    pooled = np.concatenate([np.asarray(returns_plus, dtype=np.float64),
                             np.asarray(returns_minus, dtype=np.float64)])
    return float(np.std(pooled, ddof=1))


def update_theta(theta: np.ndarray, deltas: np.ndarray, returns_plus, returns_minus,
                 alpha: float) -> np.ndarray:
    """One return-weighted ascent step along the given direction vectors.

    theta' = theta + alpha / (n sigma_R) * sum_i (R+_i - R-_i) deltas[i].
    If sigma_R < 1e-8 (all rollouts tied) the update is skipped and theta is
    returned unchanged.
    """
    theta = np.asarray(theta, dtype=np.float64)
    deltas = np.asarray(deltas, dtype=np.float64)
    rp = np.asarray(returns_plus, dtype=np.float64)
    rm = np.asarray(returns_minus, dtype=np.float64)
    n = deltas.shape[0]
    if rp.shape != (n,) or rm.shape != (n,):
        raise ValueError(f"need {n} returns per side, got {rp.shape} and {rm.shape}")
    if deltas.ndim != 2 or deltas.shape[1] != theta.shape[0]:
        raise ValueError(f"deltas of shape {deltas.shape} do not match |theta| {theta.shape[0]}")
    sigma_r = pooled_return_std(rp, rm)
    if sigma_r < SIGMA_R_EPSILON:
        return theta.copy()
    return theta + (alpha / (n * sigma_r)) * ((rp - rm) @ deltas)


def episode_seeds(master_seed: int, update_index: int, n: int) -> list[int]:
    """The shared per-pair episode seeds for one update."""
    return [derive_seed(master_seed, update_index, i) for i in range(n)]


def delta_stream(master_seed: int, update_index: int) -> Prng:
    """The perturbation-sampling stream for one update."""
    return Prng(derive_seed(master_seed, update_index, STREAM_DELTAS))


def _ascent_step(theta: np.ndarray, config: SearchConfig, update_index: int,
                 evaluate: Callable[[np.ndarray, np.ndarray, list[int]], tuple]):
    """Shared core of search_step and optimize_objective.

    `evaluate(theta, deltas, seeds)` must return (returns_plus, returns_minus)
    indexed like deltas. The update itself uses unit-variance directions
    deltas / sigma_k.
    """
    alpha_k = config.alpha.value(update_index, config.n_updates)
    sigma_k = config.sigma.value(update_index, config.n_updates)
    deltas = sample_deltas(theta.shape[0], config.n_deltas, sigma_k,
                           delta_stream(config.master_seed, update_index))
    seeds = episode_seeds(config.master_seed, update_index, config.n_deltas)
    returns_plus, returns_minus = evaluate(theta, deltas, seeds)
    rp = np.asarray(returns_plus, dtype=np.float64)
    rm = np.asarray(returns_minus, dtype=np.float64)
    theta_next = update_theta(theta, deltas / sigma_k, rp, rm, alpha_k)
    record = UpdateRecord(
        update_index=update_index,
        alpha_used=alpha_k,
        sigma_used=sigma_k,
        returns_plus=rp,
        returns_minus=rm,
        sigma_r=pooled_return_std(rp, rm),
        theta_norm_after=float(np.linalg.norm(theta_next)),
    )
    return theta_next, record


def search_step(template: MlpPolicy, theta: np.ndarray, env_name: str, config: SearchConfig,
                update_index: int, workers: int = 1,
                _evaluator: Optional[PairEvaluator] = None):
    """One full update against an environment: sample, paired rollouts, ascend.

    Returns (theta', UpdateRecord, list[PairOutcome]). `template` supplies
    the shapes, normalizer and bounds that the flat vector does not carry.
    """
    if not 0 <= update_index < max(config.n_updates, 1):
        raise ValueError(f"update_index {update_index} outside [0, {config.n_updates})")
    outcomes_box = []

    def evaluate(th, deltas, seeds):
        ev = _evaluator
        if ev is None:
            ev = PairEvaluator(template, env_name, config.max_episode_steps,
                               config.shaping(), workers)
        try:
            outcomes = ev.evaluate(th, deltas, seeds)
        finally:
            if _evaluator is None:
                ev.close()
        outcomes_box.extend(outcomes)
        return (np.array([o.return_plus for o in outcomes]),
                np.array([o.return_minus for o in outcomes]))

    theta_next, record = _ascent_step(theta, config, update_index, evaluate)
    return theta_next, record, outcomes_box


def finetune(initial: MlpPolicy, env_name: str, config: SearchConfig, workers: int = 1,
             observer: Optional[Callable] = None):
    """Run the whole search from `initial`; returns (final policy, history).

    The final policy shares the initial policy's normalizer and bounds
    untouched. `observer(record, outcomes)` is called after each update
    (read-only instrumentation). Reproducible bit for bit at any worker
    count for fixed (initial, env_name, config).
    """
    if config.reward_mode == REWARD_MODE_DIM_RATIO:
        sign = make_env(env_name).spec.reward_sign
        if sign == NEGATIVE_RETURNS:
            raise ValueError(
                f"reward_mode=dim_ratio needs positive returns but {env_name!r} is declared "
                f"{sign}; use dim_product instead"
            )
    theta = flatten(initial)
    history = []
    with PairEvaluator(initial, env_name, config.max_episode_steps,
                       config.shaping(), workers) as evaluator:
        for k in range(config.n_updates):
            theta, record, outcomes = search_step(initial, theta, env_name, config, k,
                                                  _evaluator=evaluator)
            history.append(record)
            if observer is not None:
                observer(record, outcomes)
    return unflatten(initial, theta), history


def optimize_objective(objective: Callable[[np.ndarray], float], theta0: np.ndarray,
                       config: SearchConfig):
    """Run the identical search mechanics on a plain objective f(theta) -> return.

    Useful for calibration and sanity checks on synthetic landscapes; episode
    seeds are derived but unused since f is deterministic.
    """
    theta = np.asarray(theta0, dtype=np.float64).copy()
    history = []

    def evaluate(th, deltas, seeds):
        rp = np.array([objective(th + d) for d in deltas])
        rm = np.array([objective(th - d) for d in deltas])
        return rp, rm

    for k in range(config.n_updates):
        theta, record = _ascent_step(theta, config, k, evaluate)
        history.append(record)
    return theta, history
