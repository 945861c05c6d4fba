"""Export externally trained MLP actors into the checkpoint JSON schema.

The source is an .npz dump of a feedforward tanh actor plus its observation
normalizer, the kind of arrays any training framework can emit in a few
lines. Expected keys:

    layers.0.weight   (out, in) float matrix, consecutive indices from 0
    layers.0.bias     (out,) float vector
    layers.1.weight   ...
    normalizer.mean   (obs_dim,)
    normalizer.var    (obs_dim,)
    normalizer.clip   optional scalar (default 10.0)
    normalizer.eps    optional scalar (default 1e-8)

Action bounds are supplied on the command line (they live in the
environment, not the network). Only this architecture family is supported:
anything that smells recurrent or convolutional is rejected outright, since
the checkpoint schema cannot represent it.

The emitted JSON matches the consuming toolkit's canonical serialization
byte for byte (fixed key order, 17-significant-digit reals), so an
export -> load -> save round trip through the toolkit is byte-identical.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

FORMAT_VERSION = 1
DEFAULT_CLIP = 10.0
DEFAULT_EPS = 1e-8

_RECURRENT_MARKERS = ("lstm", "gru", "rnn", "weight_hh", "bias_hh", "hidden_state", "cell_state")
_CONV_MARKERS = ("conv", "kernel_size")


class UnsupportedArchitectureError(ValueError):
    """Source model cannot be represented as a feedforward tanh MLP checkpoint."""


class SourceFormatError(ValueError):
    """Source file is missing keys or carries inconsistent arrays."""


def _reject_unsupported(keys) -> None:
    for key in keys:
        lowered = key.lower()
        for marker in _RECURRENT_MARKERS:
            if marker in lowered:
                raise UnsupportedArchitectureError(
                    f"source looks recurrent (key {key!r}); only feedforward MLP actors "
                    "can be exported"
                )
        for marker in _CONV_MARKERS:
            if marker in lowered:
                raise UnsupportedArchitectureError(
                    f"source looks convolutional (key {key!r}); only feedforward MLP actors "
                    "can be exported"
                )


def read_source(path) -> dict:
    """Load and validate the npz dump; returns layers + normalizer arrays."""
    try:
        archive = np.load(path, allow_pickle=False)
    except FileNotFoundError:
        raise SourceFormatError(f"source model not found: {path}") from None
    except Exception as exc:
        raise SourceFormatError(f"cannot read {path} as an npz archive: {exc}") from exc
    keys = list(archive.keys())
    _reject_unsupported(keys)

    layers = []
    k = 0
    while f"layers.{k}.weight" in archive:
        w = np.asarray(archive[f"layers.{k}.weight"], dtype=np.float64)
        if w.ndim != 2:
            raise UnsupportedArchitectureError(
                f"layers.{k}.weight has rank {w.ndim}; rank > 2 means convolutional or "
                "batched weights, which cannot be exported"
            )
        if f"layers.{k}.bias" not in archive:
            raise SourceFormatError(f"layers.{k}.bias is missing")
        b = np.asarray(archive[f"layers.{k}.bias"], dtype=np.float64)
        if b.shape != (w.shape[0],):
            raise SourceFormatError(
                f"layers.{k}.bias has shape {b.shape}, expected ({w.shape[0]},)"
            )
        layers.append((w, b))
        k += 1
    if not layers:
        raise SourceFormatError("no layers.<k>.weight arrays found")

    known = {f"layers.{i}.{part}" for i in range(k) for part in ("weight", "bias")}
    known |= {"normalizer.mean", "normalizer.var", "normalizer.clip", "normalizer.eps"}
    extras = sorted(set(keys) - known)
    if extras:
        raise SourceFormatError(f"unrecognized arrays in source: {', '.join(extras)}")

    for name in ("normalizer.mean", "normalizer.var"):
        if name not in archive:
            raise SourceFormatError(f"{name} is missing")
    mean = np.asarray(archive["normalizer.mean"], dtype=np.float64)
    var = np.asarray(archive["normalizer.var"], dtype=np.float64)
    clip = float(archive["normalizer.clip"]) if "normalizer.clip" in archive else DEFAULT_CLIP
    eps = float(archive["normalizer.eps"]) if "normalizer.eps" in archive else DEFAULT_EPS

    for i in range(k - 1):
        if layers[i][0].shape[0] != layers[i + 1][0].shape[1]:
            raise SourceFormatError(
                f"layer {i} out-dim {layers[i][0].shape[0]} does not chain into "
                f"layer {i + 1} in-dim {layers[i + 1][0].shape[1]}"
            )
    if mean.ndim != 1 or mean.shape != var.shape or mean.shape[0] != layers[0][0].shape[1]:
        raise SourceFormatError(
            f"normalizer of dim {mean.shape} does not match first layer in-dim "
            f"{layers[0][0].shape[1]}"
        )
    every = np.concatenate([np.concatenate([w.ravel(), b]) for w, b in layers] + [mean, var])
    if not np.all(np.isfinite(every)) or not np.isfinite(clip) or not np.isfinite(eps):
        raise SourceFormatError("source contains NaN or infinite values")
    return {"layers": layers, "mean": mean, "var": var, "clip": clip, "eps": eps}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_vec(arr) -> str:
    return "[" + ", ".join(_fmt(v) for v in np.asarray(arr).ravel()) + "]"


def render_checkpoint(source: dict, action_low, action_high) -> str:
    """Checkpoint JSON text in the toolkit's canonical byte layout."""
    low = np.asarray(action_low, dtype=np.float64)
    high = np.asarray(action_high, dtype=np.float64)
    act_dim = source["layers"][-1][0].shape[0]
    if low.shape != (act_dim,) or high.shape != (act_dim,):
        raise SourceFormatError(
            f"action bounds must have length {act_dim}, got {low.size} and {high.size}"
        )
    if not np.all(low < high):
        raise SourceFormatError("action lower bounds must be strictly below upper bounds")
    if not np.all(np.isfinite(low)) or not np.all(np.isfinite(high)):
        raise SourceFormatError("action bounds must be finite")
    chunks = ['{"format_version": %d, "layers": [' % FORMAT_VERSION]
    chunks.append(", ".join(
        '{"in": %d, "out": %d, "weights": %s, "bias": %s}'
        % (w.shape[1], w.shape[0], _fmt_vec(w), _fmt_vec(b))
        for w, b in source["layers"]
    ))
    chunks.append(
        '], "activation": "tanh", "normalizer": {"mean": %s, "var": %s, "clip": %s, "eps": %s}, '
        '"action_low": %s, "action_high": %s}'
        % (_fmt_vec(source["mean"]), _fmt_vec(source["var"]), _fmt(source["clip"]),
           _fmt(source["eps"]), _fmt_vec(low), _fmt_vec(high))
    )
    return "".join(chunks) + "\n"


def export(source_path, out_path, action_low, action_high) -> int:
    """Convert source npz -> checkpoint JSON; returns the parameter count."""
    source = read_source(source_path)
    act_dim = source["layers"][-1][0].shape[0]
    low = _parse_bounds(action_low, act_dim, "action-low")
    high = _parse_bounds(action_high, act_dim, "action-high")
    text = render_checkpoint(source, low, high)
    with open(out_path, "w", encoding="ascii") as fh:
        fh.write(text)
    return int(sum(w.size + b.size for w, b in source["layers"]))


def _parse_bounds(value, act_dim: int, flag: str) -> np.ndarray:
    if isinstance(value, (list, tuple, np.ndarray)):
        vals = [float(v) for v in value]
    else:
        try:
            vals = [float(part) for part in str(value).split(",") if part.strip() != ""]
        except ValueError:
            raise SourceFormatError(f"--{flag} must be a number or comma-separated numbers") from None
    if len(vals) == 1:
        vals = vals * act_dim
    if len(vals) != act_dim:
        raise SourceFormatError(f"--{flag} needs 1 or {act_dim} values, got {len(vals)}")
    return np.array(vals, dtype=np.float64)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(
        prog="export-policy",
        description="Convert an npz MLP-actor dump into a policy checkpoint JSON file.",
    )
    parser.add_argument("--source", required=True, help="npz dump of the trained actor")
    parser.add_argument("--out", required=True, help="checkpoint JSON to write")
    parser.add_argument("--action-low", required=True,
                        help="lower action bounds (scalar or comma-separated)")
    parser.add_argument("--action-high", required=True,
                        help="upper action bounds (scalar or comma-separated)")
    args = parser.parse_args(argv)
    try:
        count = export(args.source, args.out, args.action_low, args.action_high)
    except (UnsupportedArchitectureError, SourceFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)
    print(f"wrote {args.out}: |theta| = {count} trainable parameters")


if __name__ == "__main__":
    main()
