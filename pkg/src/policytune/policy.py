"""Deterministic MLP policies with a frozen observation normalizer.

A policy is an ordered stack of (weight, bias) layers with tanh hidden
activations; the output layer is tanh-squashed and affinely rescaled into
the action bounds, so actions satisfy the bounds by construction rather
than by clipping. The normalizer (per-coordinate mean/variance plus a clip)
is fitted once elsewhere and never updated here: fine-tuning perturbs only
weights and biases.

Policies are immutable after construction (their arrays are marked
read-only) and therefore safe to share across concurrent rollout workers.
`with_params` builds a new policy value instead of mutating.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import struct

import numpy as np

from .errors import (
    CheckpointFormatError,
    CheckpointNotFoundError,
    CheckpointVersionError,
    DimensionChainError,
    DimensionMismatchError,
    NonFiniteParameterError,
)

CHECKPOINT_FORMAT_VERSION = 1
DEFAULT_CLIP = 10.0
DEFAULT_EPS = 1e-8


def _readonly_f64(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteParameterError(f"{name} contains NaN or infinite values")
    arr.setflags(write=False)
    return arr


class ObservationNormalizer:
    """Frozen per-coordinate standardization followed by clipping.

    normalize(x) = clamp((x - mean) / sqrt(var + eps), -clip, +clip)
    """

    def __init__(self, mean, var, clip: float = DEFAULT_CLIP, eps: float = DEFAULT_EPS):
        self.mean = _readonly_f64(mean, "normalizer mean")
        self.var = _readonly_f64(var, "normalizer var")
        if self.mean.ndim != 1 or self.var.ndim != 1:
            raise CheckpointFormatError("normalizer mean/var must be 1-D")
        if len(self.mean) != len(self.var):
            raise DimensionMismatchError("normalizer var", len(self.mean), len(self.var))
        if np.any(self.var < 0.0):
            raise CheckpointFormatError("normalizer var entries must be >= 0")
        if not (clip > 0.0 and math.isfinite(clip)):
            raise CheckpointFormatError("normalizer clip must be positive and finite")
        if not (eps > 0.0 and math.isfinite(eps)):
            raise CheckpointFormatError("normalizer eps must be positive and finite")
        self.clip = float(clip)
        self.eps = float(eps)
        self._inv_scale = 1.0 / np.sqrt(self.var + self.eps)
        self._inv_scale.setflags(write=False)

    @property
    def dim(self) -> int:
        return len(self.mean)

    def normalize(self, obs) -> np.ndarray:
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape != self.mean.shape:
            raise DimensionMismatchError("observation", len(self.mean), obs.size)
        return np.clip((obs - self.mean) * self._inv_scale, -self.clip, self.clip)

    def __eq__(self, other):
        if not isinstance(other, ObservationNormalizer):
            return NotImplemented
        return (
            np.array_equal(self.mean, other.mean)
            and np.array_equal(self.var, other.var)
            and self.clip == other.clip
            and self.eps == other.eps
        )


def normalizer_checksum(normalizer: ObservationNormalizer) -> str:
    """Hash of (mean, var, clip, eps); stable across a fine-tuning run."""
    h = hashlib.sha256()
    h.update(normalizer.mean.tobytes())
    h.update(normalizer.var.tobytes())
    h.update(struct.pack("<dd", normalizer.clip, normalizer.eps))
    return h.hexdigest()


class MlpPolicy:
    """Deterministic tanh MLP mapping normalized observations to bounded actions.

    `layers` is an ordered list of (W, b) with W of shape (out, in). All but
    the last layer apply tanh(W x + b); the last applies
    low + (tanh(W x + b) + 1) / 2 * (high - low).
    """

    def __init__(self, layers, normalizer: ObservationNormalizer, action_low, action_high,
                 hidden_activation: str = "tanh"):
        if hidden_activation != "tanh":
            raise CheckpointFormatError(f"unsupported activation {hidden_activation!r}")
        if not layers:
            raise CheckpointFormatError("policy needs at least one layer")
        self.hidden_activation = hidden_activation
        self.normalizer = normalizer
        self.layers = []
        for k, (w, b) in enumerate(layers):
            w = _readonly_f64(w, f"layer {k} weights")
            b = _readonly_f64(b, f"layer {k} bias")
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise CheckpointFormatError(f"layer {k} has inconsistent shapes {w.shape} / {b.shape}")
            self.layers.append((w, b))
        for k in range(len(self.layers) - 1):
            out_k = self.layers[k][0].shape[0]
            in_next = self.layers[k + 1][0].shape[1]
            if out_k != in_next:
                raise DimensionChainError(
                    f"layer {k} out-dim {out_k} does not chain into layer {k + 1} in-dim {in_next}"
                )
        if self.layers[0][0].shape[1] != normalizer.dim:
            raise DimensionChainError(
                f"first layer in-dim {self.layers[0][0].shape[1]} != observation dim {normalizer.dim}"
            )
        self.action_low = _readonly_f64(action_low, "action_low")
        self.action_high = _readonly_f64(action_high, "action_high")
        act_dim = self.layers[-1][0].shape[0]
        if self.action_low.shape != (act_dim,) or self.action_high.shape != (act_dim,):
            raise DimensionChainError(
                f"action bounds of length {len(self.action_low)}/{len(self.action_high)} "
                f"do not match action dim {act_dim}"
            )
        if not np.all(self.action_low < self.action_high):
            raise CheckpointFormatError("action_low must be < action_high elementwise")
        self._half_range = 0.5 * (self.action_high - self.action_low)
        self._half_range.setflags(write=False)

    @property
    def obs_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def act_dim(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in self.layers)

    def normalize(self, obs) -> np.ndarray:
        return self.normalizer.normalize(obs)

    def action_from_normalized(self, x: np.ndarray) -> np.ndarray:
        for w, b in self.layers[:-1]:
            x = np.tanh(w @ x + b)
        w, b = self.layers[-1]
        t = np.tanh(w @ x + b)
        return self.action_low + (t + 1.0) * self._half_range

    def forward_mla(self, obs) -> np.ndarray:
        """Deterministic action for `obs` (the maximum-likelihood action)."""
        return self.action_from_normalized(self.normalize(obs))

    def with_params(self, values: np.ndarray) -> "MlpPolicy":
        """New policy with trainable parameters replaced by the flat vector."""
        return unflatten(self, values)

    def __eq__(self, other):
        if not isinstance(other, MlpPolicy):
            return NotImplemented
        return (
            len(self.layers) == len(other.layers)
            and all(
                np.array_equal(wa, wb) and np.array_equal(ba, bb)
                for (wa, ba), (wb, bb) in zip(self.layers, other.layers)
            )
            and self.normalizer == other.normalizer
            and np.array_equal(self.action_low, other.action_low)
            and np.array_equal(self.action_high, other.action_high)
        )


def normalize(normalizer: ObservationNormalizer, obs) -> np.ndarray:
    return normalizer.normalize(obs)


def forward_mla(policy: MlpPolicy, obs) -> np.ndarray:
    return policy.forward_mla(obs)


def flatten(policy: MlpPolicy) -> np.ndarray:
    """All trainable parameters as one flat vector.

    Layout: layer-major; within a layer, the weight matrix in row-major
    (C) order followed by the bias. Normalizer statistics and action bounds
    are not trainable and are not included.
    """
    return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in policy.layers])


def unflatten(template: MlpPolicy, values: np.ndarray) -> MlpPolicy:
    """Rebuild a policy from `template`'s shapes and a flat parameter vector.

    The normalizer and action bounds are taken from the template untouched.
    """
    values = np.asarray(values, dtype=np.float64)
    expected = template.param_count
    if values.ndim != 1 or values.size != expected:
        raise DimensionMismatchError("parameter vector", expected, values.size)
    layers = []
    pos = 0
    for w, b in template.layers:
        nw, nb = w.size, b.size
        layers.append((values[pos:pos + nw].reshape(w.shape), values[pos + nw:pos + nw + nb]))
        pos += nw + nb
    return MlpPolicy(layers, template.normalizer, template.action_low, template.action_high,
                     template.hidden_activation)


def _fmt(x: float) -> str:
    """Decimal serialization with 17 significant digits (round-trip exact)."""
    return format(float(x), ".17g")


def _fmt_vec(arr: np.ndarray) -> str:
    return "[" + ", ".join(_fmt(v) for v in arr.ravel()) + "]"


def dumps_checkpoint(policy: MlpPolicy) -> str:
    """Canonical checkpoint JSON: fixed key order, 17-significant-digit reals.

    The byte-level layout is part of the file contract (exporters replicate
    it), so the emitter is hand-rolled rather than json.dumps.
    """
    parts = ['{"format_version": %d, "layers": [' % CHECKPOINT_FORMAT_VERSION]
    layer_chunks = []
    for w, b in policy.layers:
        layer_chunks.append(
            '{"in": %d, "out": %d, "weights": %s, "bias": %s}'
            % (w.shape[1], w.shape[0], _fmt_vec(w), _fmt_vec(b))
        )
    parts.append(", ".join(layer_chunks))
    norm = policy.normalizer
    parts.append(
        '], "activation": "%s", "normalizer": {"mean": %s, "var": %s, "clip": %s, "eps": %s}, '
        '"action_low": %s, "action_high": %s}'
        % (
            policy.hidden_activation,
            _fmt_vec(norm.mean),
            _fmt_vec(norm.var),
            _fmt(norm.clip),
            _fmt(norm.eps),
            _fmt_vec(policy.action_low),
            _fmt_vec(policy.action_high),
        )
    )
    return "".join(parts) + "\n"


def save_checkpoint(policy: MlpPolicy, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps_checkpoint(policy))


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise CheckpointFormatError(message)


def _real_vector(obj, name: str, length: int | None = None) -> np.ndarray:
    _require(isinstance(obj, list), f"{name} must be a list")
    if length is not None:
        _require(len(obj) == length, f"{name} must have length {length}, got {len(obj)}")
    _require(all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj),
             f"{name} must contain only numbers")
    return np.array(obj, dtype=np.float64)


def load_checkpoint(path) -> MlpPolicy:
    """Load and fully validate a checkpoint file.

    Raises CheckpointNotFoundError, CheckpointFormatError,
    CheckpointVersionError, NonFiniteParameterError or DimensionChainError,
    each naming the problem.
    """
    if not os.path.exists(path):
        raise CheckpointNotFoundError(f"checkpoint not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointFormatError(f"checkpoint is not valid JSON: {exc}") from exc
    return policy_from_dict(doc)


def policy_from_dict(doc) -> MlpPolicy:
    _require(isinstance(doc, dict), "checkpoint root must be a JSON object")
    version = doc.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointVersionError(
            f"unsupported format_version {version!r} (expected {CHECKPOINT_FORMAT_VERSION})"
        )
    _require(doc.get("activation") == "tanh", "activation must be \"tanh\"")
    raw_layers = doc.get("layers")
    _require(isinstance(raw_layers, list) and raw_layers, "layers must be a nonempty list")
    layers = []
    for k, entry in enumerate(raw_layers):
        _require(isinstance(entry, dict), f"layer {k} must be an object")
        n_in, n_out = entry.get("in"), entry.get("out")
        _require(isinstance(n_in, int) and n_in >= 1, f"layer {k} \"in\" must be a positive integer")
        _require(isinstance(n_out, int) and n_out >= 1, f"layer {k} \"out\" must be a positive integer")
        w = _real_vector(entry.get("weights"), f"layer {k} weights", n_in * n_out).reshape(n_out, n_in)
        b = _real_vector(entry.get("bias"), f"layer {k} bias", n_out)
        layers.append((w, b))
    raw_norm = doc.get("normalizer")
    _require(isinstance(raw_norm, dict), "normalizer must be an object")
    mean = _real_vector(raw_norm.get("mean"), "normalizer mean")
    var = _real_vector(raw_norm.get("var"), "normalizer var")
    clip = raw_norm.get("clip", DEFAULT_CLIP)
    eps = raw_norm.get("eps", DEFAULT_EPS)
    _require(isinstance(clip, (int, float)) and not isinstance(clip, bool), "normalizer clip must be a number")
    _require(isinstance(eps, (int, float)) and not isinstance(eps, bool), "normalizer eps must be a number")
    low = _real_vector(doc.get("action_low"), "action_low")
    high = _real_vector(doc.get("action_high"), "action_high")
    normalizer = ObservationNormalizer(mean, var, float(clip), float(eps))
    return MlpPolicy(layers, normalizer, low, high)
