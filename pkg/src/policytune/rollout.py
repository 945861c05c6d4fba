"""Deterministic episode execution and paired-candidate evaluation.

A rollout is the plain loop obs -> policy MLA -> env.step, accumulating the
undiscounted return left to right so float summation is reproducible.
`evaluate_pairs` runs both members of every perturbation pair on the same
episode seed and reduces results by pair index (never arrival order), so its
output is bit-identical whether it runs sequentially or on a worker pool of
any size.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import meshdim
from .envsim import Env, make_env
from .errors import PairEvaluationError, PolicyTuneError, RolloutNumericsError
from .policy import MlpPolicy, unflatten
from .rng import EVAL_UPDATE_OFFSET, derive_seed  # re-exported; seed namespace constants live in rng

__all__ = [
    "RolloutResult",
    "PairOutcome",
    "PairEvaluator",
    "run_episode",
    "evaluate_pairs",
    "derive_seed",
    "EVAL_UPDATE_OFFSET",
    "write_trace_csv",
    "read_trace_csv",
]


@dataclass
class RolloutResult:
    episode_return: float
    steps: int
    terminated_early: bool
    trace: Optional[np.ndarray] = None  # (steps, obs_dim) normalized observations
    initial_observation: Optional[np.ndarray] = None  # raw reset() output


def run_episode(env: Env, policy: MlpPolicy, seed: int, max_steps: int | None = None,
                record_trace: bool = False) -> RolloutResult:
    """One deterministic MLA episode; same (policy, seed) gives a bit-identical result.

    The trace, when recorded, holds the normalized observation the policy
    saw before each action (one row per executed step).
    """
    if max_steps is None:
        max_steps = env.spec.max_steps
    obs = env.reset(seed)
    initial = obs
    total = 0.0
    steps = 0
    trace = [] if record_trace else None
    while steps < max_steps:
        x = policy.normalize(obs)
        if record_trace:
            trace.append(x)
        result = env.step(policy.action_from_normalized(x))
        reward = result.reward
        obs = result.observation
        # cheap guard: a NaN/Inf anywhere poisons these sums
        if not math.isfinite(reward + float(obs.sum())):
            raise RolloutNumericsError(
                f"non-finite reward or observation at step {steps} "
                f"(reward={reward}, obs={obs.tolist()})"
            )
        total += reward
        steps += 1
        if result.done:
            break
    return RolloutResult(
        episode_return=total,
        steps=steps,
        terminated_early=result.terminated_early if steps else False,
        trace=np.array(trace) if record_trace else None,
        initial_observation=initial,
    )


@dataclass
class PairOutcome:
    """Everything a search update needs to know about one (theta+d, theta-d) pair."""

    index: int
    return_plus: float           # shaped when a dimension reward is active
    return_minus: float
    raw_return_plus: float
    raw_return_minus: float
    steps_plus: int
    steps_minus: int
    terminated_early_plus: bool
    terminated_early_minus: bool
    initial_obs_plus: np.ndarray
    initial_obs_minus: np.ndarray
    dimension_plus: Optional[float] = None
    dimension_minus: Optional[float] = None


def _shaped(raw: float, trace, shaping) -> tuple[float, Optional[float]]:
    if shaping is None:
        return raw, None
    mode, ladder = shaping
    est = meshdim.estimate_dimension(trace, ladder)
    return meshdim.shaped_return(raw, est, mode), est.average


def _eval_one_pair(env, template, theta, delta, seed, max_steps, shaping, index) -> PairOutcome:
    record = shaping is not None
    try:
        plus = run_episode(env, unflatten(template, theta + delta), seed, max_steps, record)
        minus = run_episode(env, unflatten(template, theta - delta), seed, max_steps, record)
        rp, dp = _shaped(plus.episode_return, plus.trace, shaping)
        rm, dm = _shaped(minus.episode_return, minus.trace, shaping)
    except PolicyTuneError as exc:
        raise PairEvaluationError(index, exc) from exc
    return PairOutcome(
        index=index,
        return_plus=rp,
        return_minus=rm,
        raw_return_plus=plus.episode_return,
        raw_return_minus=minus.episode_return,
        steps_plus=plus.steps,
        steps_minus=minus.steps,
        terminated_early_plus=plus.terminated_early,
        terminated_early_minus=minus.terminated_early,
        initial_obs_plus=plus.initial_observation,
        initial_obs_minus=minus.initial_observation,
        dimension_plus=dp,
        dimension_minus=dm,
    )


# worker-process globals, set once per pool by _init_worker
_WORKER = {}


def _init_worker(env_name, template, max_steps, shaping):
    _WORKER["env"] = make_env(env_name)
    _WORKER["template"] = template
    _WORKER["max_steps"] = max_steps
    _WORKER["shaping"] = shaping


def _worker_eval(task):
    index, theta, delta, seed = task
    return _eval_one_pair(_WORKER["env"], _WORKER["template"], theta, delta, seed,
                          _WORKER["max_steps"], _WORKER["shaping"], index)


class PairEvaluator:
    """Evaluates batches of perturbation pairs, optionally on a process pool.

    Results are always ordered by pair index; worker count never changes
    values, only wall-clock time. Reuse one evaluator across the updates of
    a fine-tuning run so pool startup is paid once.
    """

    def __init__(self, template: MlpPolicy, env_name: str, max_steps: int | None = None,
                 shaping=None, workers: int = 1):
        self.template = template
        self.env_name = env_name
        self.max_steps = max_steps
        self.shaping = shaping
        self.workers = max(1, int(workers))
        self._pool = None
        self._env = None
        if self.workers > 1:
            # fork keeps worker startup cheap and never re-imports __main__
            # (spawn breaks under stdin-driven scripts); fall back otherwise.
            method = "fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn"
            ctx = multiprocessing.get_context(method)
            self._pool = ctx.Pool(self.workers, initializer=_init_worker,
                                  initargs=(env_name, template, max_steps, shaping))
        else:
            self._env = make_env(env_name)

    def evaluate(self, theta: np.ndarray, deltas: np.ndarray, seeds: Sequence[int]) -> list[PairOutcome]:
        if len(deltas) != len(seeds):
            raise ValueError(f"got {len(deltas)} deltas but {len(seeds)} seeds")
        if self._pool is not None:
            tasks = [(i, theta, deltas[i], seeds[i]) for i in range(len(seeds))]
            outcomes = self._pool.map(_worker_eval, tasks)
            return sorted(outcomes, key=lambda o: o.index)
        return [
            _eval_one_pair(self._env, self.template, theta, deltas[i], seeds[i],
                           self.max_steps, self.shaping, i)
            for i in range(len(seeds))
        ]

    def close(self):
        if self._pool is not None:
            self._pool.close()
            self._pool.join()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def evaluate_pairs(template: MlpPolicy, theta: np.ndarray, deltas: np.ndarray,
                   env_name: str, seeds: Sequence[int], max_steps: int | None = None,
                   workers: int = 1, shaping=None) -> tuple[np.ndarray, np.ndarray]:
    """Returns of theta+delta_i and theta-delta_i, each under seeds[i].

    Output vectors are indexed like `deltas`; parallel and sequential
    execution produce identical vectors.
    """
    with PairEvaluator(template, env_name, max_steps, shaping, workers) as ev:
        outcomes = ev.evaluate(theta, deltas, seeds)
    return (
        np.array([o.return_plus for o in outcomes]),
        np.array([o.return_minus for o in outcomes]),
    )


def write_trace_csv(path, trace: np.ndarray) -> None:
    """Trace export: header step,obs_0,...,obs_{d-1}, one row per step."""
    trace = np.asarray(trace, dtype=np.float64)
    if trace.ndim != 2:
        raise ValueError("trace must be a (steps, obs_dim) array")
    d = trace.shape[1]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("step," + ",".join(f"obs_{j}" for j in range(d)) + "\n")
        for i, row in enumerate(trace):
            fh.write(str(i) + "," + ",".join(repr(v) for v in row.tolist()) + "\n")


def read_trace_csv(path) -> np.ndarray:
    """Parse a trace CSV back into the (steps, obs_dim) observation array."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        if not header or header[0] != "step" or any(not c.startswith("obs_") for c in header[1:]):
            raise ValueError(f"not a trace CSV (header {header!r})")
        rows = []
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")[1:]])
    if not rows:
        raise ValueError("trace CSV has no data rows")
    return np.array(rows, dtype=np.float64)
