"""Deterministically seedable continuous-control environments.

Three desk-scale testbeds share one episode contract: reset(seed) draws the
initial condition from the seed and nothing else, step(action) advances the
closed-form dynamics exactly one timestep, and two episodes with the same
seed and action sequence produce bit-identical reward sequences. State is
kept in plain Python floats; observations come back as float64 arrays.

Environment instances are cheap and single-threaded: concurrent rollouts
use independent instances (or reuse one sequentially via reset).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, EpisodeFinishedError
from .rng import Prng

POSITIVE_RETURNS = "positive_returns"
NEGATIVE_RETURNS = "negative_returns"
MIXED_RETURNS = "mixed"

_TWO_PI = 2.0 * math.pi


@dataclass
class EnvStep:
    observation: np.ndarray
    reward: float
    terminated_early: bool
    done: bool


@dataclass(frozen=True)
class EnvSpec:
    name: str
    obs_dim: int
    act_dim: int
    max_steps: int
    reward_sign: str

    def __post_init__(self):
        if self.obs_dim < 1 or self.act_dim < 1 or self.max_steps < 1:
            raise ValueError("obs_dim, act_dim and max_steps must all be >= 1")
        if self.reward_sign not in (POSITIVE_RETURNS, NEGATIVE_RETURNS, MIXED_RETURNS):
            raise ValueError(f"unknown reward_sign {self.reward_sign!r}")


class Env:
    """Base episode machinery: step counting, done bookkeeping, action clamping."""

    spec: EnvSpec
    action_low: np.ndarray
    action_high: np.ndarray

    def __init__(self):
        self._steps = 0
        self._done = True

    def reset(self, seed: int) -> np.ndarray:
        self._steps = 0
        self._done = False
        self._reset_state(Prng(seed))
        return self._observe()

    def step(self, action) -> EnvStep:
        if self._done:
            raise EpisodeFinishedError(f"{self.spec.name}: step() called on a finished episode")
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (self.spec.act_dim,):
            raise DimensionMismatchError("action", self.spec.act_dim, action.size)
        reward, early = self._advance(action)
        self._steps += 1
        done = early or self._steps >= self.spec.max_steps or self._goal_reached()
        self._done = done
        return EnvStep(self._observe(), reward, early, done)

    # subclass hooks
    def _reset_state(self, rng: Prng) -> None:
        raise NotImplementedError

    def _advance(self, action: np.ndarray) -> tuple[float, bool]:
        raise NotImplementedError

    def _observe(self) -> np.ndarray:
        raise NotImplementedError

    def _goal_reached(self) -> bool:
        return False


class ContinuousMountainCar(Env):
    """Underpowered car on a valley wall; positive returns via the goal bonus.

    vel' = clamp(vel + 0.0015 a - 0.0025 cos(3 pos), +-0.07)
    pos' = clamp(pos + vel', [-1.2, 0.6])
    reward = -0.1 a^2, plus 100 when pos' >= 0.45 (episode then ends).
    Reset: pos ~ U(-0.6, -0.4), vel = 0.
    """

    GOAL_POS = 0.45
    GOAL_BONUS = 100.0

    def __init__(self):
        super().__init__()
        self.spec = EnvSpec("mountain_car", obs_dim=2, act_dim=1, max_steps=999,
                            reward_sign=POSITIVE_RETURNS)
        self.action_low = np.array([-1.0])
        self.action_high = np.array([1.0])
        self.pos = 0.0
        self.vel = 0.0
        self._goal = False

    def _reset_state(self, rng):
        self.pos = float(rng.uniform_range(-0.6, -0.4, 1)[0])
        self.vel = 0.0
        self._goal = False

    def _advance(self, action):
        a = min(max(float(action[0]), -1.0), 1.0)
        vel = self.vel + 0.0015 * a - 0.0025 * math.cos(3.0 * self.pos)
        vel = min(max(vel, -0.07), 0.07)
        pos = self.pos + vel
        pos = min(max(pos, -1.2), 0.6)
        self.pos, self.vel = pos, vel
        reward = -0.1 * a * a
        if pos >= self.GOAL_POS:
            self._goal = True
            reward += self.GOAL_BONUS
        return reward, False

    def _observe(self):
        return np.array((self.pos, self.vel))

    def _goal_reached(self):
        return self._goal


class PendulumSwingUp(Env):
    """Torque-limited pendulum swing-up; every reward is a cost (<= 0).

    thetadot' = clamp(thetadot + (3g/(2l) sin(theta) + 3/(m l^2) u) dt, +-8)
    theta' = theta + thetadot' dt
    reward = -(wrap(theta')^2 + 0.1 thetadot'^2 + 0.001 u^2), wrap into (-pi, pi].
    Reset: theta ~ U(-pi, pi), thetadot ~ U(-1, 1), drawn in that order.
    """

    G, M, L, DT = 10.0, 1.0, 1.0, 0.05

    def __init__(self):
        super().__init__()
        self.spec = EnvSpec("pendulum", obs_dim=3, act_dim=1, max_steps=200,
                            reward_sign=NEGATIVE_RETURNS)
        self.action_low = np.array([-2.0])
        self.action_high = np.array([2.0])
        self.theta = 0.0
        self.thetadot = 0.0

    def _reset_state(self, rng):
        draws = rng.uniform(2)
        self.theta = -math.pi + _TWO_PI * float(draws[0])
        self.thetadot = -1.0 + 2.0 * float(draws[1])

    def _advance(self, action):
        u = min(max(float(action[0]), -2.0), 2.0)
        thetadot = self.thetadot + (
            1.5 * self.G / self.L * math.sin(self.theta) + 3.0 / (self.M * self.L * self.L) * u
        ) * self.DT
        thetadot = min(max(thetadot, -8.0), 8.0)
        theta = self.theta + thetadot * self.DT
        self.theta, self.thetadot = theta, thetadot
        wrapped = theta % _TWO_PI
        if wrapped > math.pi:
            wrapped -= _TWO_PI
        reward = -(wrapped * wrapped + 0.1 * thetadot * thetadot + 0.001 * u * u)
        return reward, False

    def _observe(self):
        return np.array((math.cos(self.theta), math.sin(self.theta), self.thetadot))


class CorridorWalker(Env):
    """Point mass paid for forward progress inside a corridor of half-width 1.

    v' = v + 0.1 a;  p' = p + 0.1 v'
    reward = delta x exactly; early termination when |y| > 1.
    Reset: x = 0, vx = vy = 0, y ~ U(-0.5, 0.5).
    """

    def __init__(self):
        super().__init__()
        self.spec = EnvSpec("corridor", obs_dim=4, act_dim=2, max_steps=200,
                            reward_sign=POSITIVE_RETURNS)
        self.action_low = np.array([-1.0, -1.0])
        self.action_high = np.array([1.0, 1.0])
        self.x = 0.0
        self.y = 0.0
        self.vx = 0.0
        self.vy = 0.0

    def _reset_state(self, rng):
        self.x = 0.0
        self.y = float(rng.uniform_range(-0.5, 0.5, 1)[0])
        self.vx = 0.0
        self.vy = 0.0

    def _advance(self, action):
        ax = min(max(float(action[0]), -1.0), 1.0)
        ay = min(max(float(action[1]), -1.0), 1.0)
        self.vx += 0.1 * ax
        self.vy += 0.1 * ay
        old_x = self.x
        self.x += 0.1 * self.vx
        self.y += 0.1 * self.vy
        reward = self.x - old_x
        return reward, abs(self.y) > 1.0

    def _observe(self):
        return np.array((self.x, self.y, self.vx, self.vy))


_ENV_CLASSES = {
    "mountain_car": ContinuousMountainCar,
    "pendulum": PendulumSwingUp,
    "corridor": CorridorWalker,
}

ENV_NAMES = tuple(sorted(_ENV_CLASSES))


def make_env(name: str) -> Env:
    try:
        cls = _ENV_CLASSES[name]
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; choose from {', '.join(ENV_NAMES)}") from None
    return cls()
