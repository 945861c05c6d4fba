"""Monte-Carlo policy evaluation and before/after comparison reports.

Evaluation is deterministic apart from the initial condition: trial i uses
the episode seed derive_seed(eval_seed_base, EVAL_UPDATE_OFFSET, i), a
namespace disjoint from every training seed. Because the seed list depends
only on (eval_seed_base, n_trials), a baseline and its fine-tuned version
are always measured on identical initial conditions, making the comparison
paired.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import meshdim
from .envsim import make_env
from .policy import MlpPolicy
from .rng import EVAL_UPDATE_OFFSET, derive_seed
from .rollout import run_episode


@dataclass
class EvalReport:
    env: str
    n_trials: int
    mean_return: float
    std_return: float          # sample std (denominator n-1); 0.0 when n == 1
    failure_rate: float        # early terminations / n_trials
    mean_dimension: Optional[float]
    per_trial: list            # [(seed, episode_return, terminated_early), ...]
    per_trial_dimension: Optional[list] = None

    def to_dict(self) -> dict:
        return {
            "env": self.env,
            "n_trials": self.n_trials,
            "mean_return": self.mean_return,
            "std_return": self.std_return,
            "failure_rate": self.failure_rate,
            "mean_dimension": self.mean_dimension,
            "per_trial": [[seed, ret, early] for seed, ret, early in self.per_trial],
            "per_trial_dimension": self.per_trial_dimension,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvalReport":
        return cls(
            env=doc["env"],
            n_trials=doc["n_trials"],
            mean_return=doc["mean_return"],
            std_return=doc["std_return"],
            failure_rate=doc["failure_rate"],
            mean_dimension=doc["mean_dimension"],
            per_trial=[(seed, ret, bool(early)) for seed, ret, early in doc["per_trial"]],
            per_trial_dimension=doc.get("per_trial_dimension"),
        )


def eval_seeds(eval_seed_base: int, n_trials: int) -> list[int]:
    return [derive_seed(eval_seed_base, EVAL_UPDATE_OFFSET, i) for i in range(n_trials)]


def monte_carlo_eval(policy: MlpPolicy, env_name: str, n_trials: int = 100,
                     eval_seed_base: int = 0, with_dimension: bool = False,
                     ladder: meshdim.MeshLadder = meshdim.DEFAULT_LADDER,
                     max_steps: int | None = None) -> EvalReport:
    """Evaluate `policy` on `n_trials` seeded MLA rollouts."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    env = make_env(env_name)
    per_trial = []
    dims = [] if with_dimension else None
    for seed in eval_seeds(eval_seed_base, n_trials):
        result = run_episode(env, policy, seed, max_steps, record_trace=with_dimension)
        per_trial.append((seed, result.episode_return, result.terminated_early))
        if with_dimension:
            dims.append(meshdim.estimate_dimension(result.trace, ladder).average)
    returns = np.array([ret for _, ret, _ in per_trial])
    failures = sum(1 for _, _, early in per_trial if early)
    return EvalReport(
        env=env_name,
        n_trials=n_trials,
        mean_return=float(returns.mean()),
        std_return=0.0 if n_trials == 1 else float(np.std(returns, ddof=1)),
        failure_rate=failures / n_trials,
        mean_dimension=float(np.mean(dims)) if with_dimension else None,
        per_trial=per_trial,
        per_trial_dimension=dims,
    )


@dataclass
class ComparisonReport:
    baseline: EvalReport
    tuned: EvalReport
    mean_delta: float
    std_delta: float
    failure_delta: float


def compare(baseline: EvalReport, tuned: EvalReport) -> ComparisonReport:
    """Exact field deltas (tuned - baseline); reports must match env and n_trials."""
    if baseline.env != tuned.env:
        raise ValueError(f"cannot compare reports for {baseline.env!r} vs {tuned.env!r}")
    if baseline.n_trials != tuned.n_trials:
        raise ValueError(
            f"cannot compare reports with {baseline.n_trials} vs {tuned.n_trials} trials"
        )
    return ComparisonReport(
        baseline=baseline,
        tuned=tuned,
        mean_delta=tuned.mean_return - baseline.mean_return,
        std_delta=tuned.std_return - baseline.std_return,
        failure_delta=tuned.failure_rate - baseline.failure_rate,
    )


def _row(label: str, report: EvalReport) -> str:
    dim = "" if report.mean_dimension is None else f"  dim {report.mean_dimension:8.3f}"
    return (f"{label:<10} {report.mean_return:12.3f} +/- {report.std_return:<10.3f}"
            f" {100.0 * report.failure_rate:9.2f}%{dim}")


def render_comparison(cmp: ComparisonReport) -> str:
    """Two-row table (mean +/- std, failure %) plus the delta line."""
    lines = [
        f"{'':<10} {'mean return':>12} {'+/- std':<14} {'failure':>9}",
        _row("baseline", cmp.baseline),
        _row("tuned", cmp.tuned),
        (f"{'delta':<10} {cmp.mean_delta:+12.3f} {cmp.std_delta:<+14.3f}"
         f" {100.0 * cmp.failure_delta:+8.2f}pp"),
    ]
    return "\n".join(lines)


def render_report(report: EvalReport) -> str:
    lines = [
        f"env            {report.env}",
        f"trials         {report.n_trials}",
        f"mean return    {report.mean_return:.6g}",
        f"std return     {report.std_return:.6g}",
        f"failure rate   {100.0 * report.failure_rate:.2f}%",
    ]
    if report.mean_dimension is not None:
        lines.append(f"mean dimension {report.mean_dimension:.6g}")
    return "\n".join(lines)


def save_report(report: EvalReport, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=False)
        fh.write("\n")


def load_report(path) -> EvalReport:
    with open(path, "r", encoding="utf-8") as fh:
        return EvalReport.from_dict(json.load(fh))
