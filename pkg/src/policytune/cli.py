"""Command-line entry point.

Subcommands: pretrain, finetune, eval, compare, dim, trace. Exit codes:
0 success, 1 usage error, 2 runtime error (bad checkpoint, env failure...).
All randomness is controlled by seeds; given identical flags and inputs,
every data file written is byte-identical across runs.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import configio, evaluation, meshdim, rollout, search
from .envsim import ENV_NAMES, make_env
from .errors import PolicyTuneError
from .meshdim import REWARD_MODES
from .policy import load_checkpoint, save_checkpoint
from .pretrain import QUALITY_UPDATES
from .pretrain import pretrain as run_pretrain


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="policytune",
                     description="Fine-tune deterministic MLP control policies by direct random search.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("pretrain", help="train an imperfect baseline policy from scratch",
                       parents=[], add_help=True)
    p.add_argument("--env", required=True, choices=ENV_NAMES)
    p.add_argument("--config", help="TOML config (search + pretrain keys)")
    p.add_argument("--out", required=True, help="checkpoint file to write")
    p.add_argument("--seed", type=int, default=0, help="master seed (overrides config)")
    p.add_argument("--quality", choices=sorted(QUALITY_UPDATES), default=None,
                   help="update budget (overrides config)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_pretrain)

    p = sub.add_parser("finetune", help="run the random search from a checkpoint")
    p.add_argument("--config", required=True, help="TOML config (must name the env)")
    p.add_argument("--in", dest="infile", required=True, help="starting checkpoint")
    p.add_argument("--out", required=True, help="tuned checkpoint to write")
    p.add_argument("--reward-mode", choices=REWARD_MODES, default=None,
                   help="override the config's reward_mode")
    p.add_argument("--workers", type=int, default=1, help="parallel rollout workers")
    p.add_argument("--progress", action="store_true",
                   help="stream one JSON object per update to stdout")
    p.set_defaults(func=_cmd_finetune)

    p = sub.add_parser("eval", help="Monte-Carlo evaluation of a checkpoint")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--env", required=True, choices=ENV_NAMES)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0, help="evaluation seed base")
    p.add_argument("--out", required=True, help="JSON report file to write")
    p.add_argument("--dim", action="store_true", help="also estimate trajectory dimension")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("compare", help="before/after table from two eval reports")
    p.add_argument("--baseline", required=True)
    p.add_argument("--tuned", required=True)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("dim", help="mesh dimension of a trace CSV")
    p.add_argument("--trace", required=True)
    p.add_argument("--base", type=float, default=meshdim.MeshLadder.base_scale,
                   help="coarsest cell edge")
    p.add_argument("--ratio", type=float, default=meshdim.MeshLadder.ratio)
    p.add_argument("--scales", type=int, default=meshdim.MeshLadder.num_scales)
    p.set_defaults(func=_cmd_dim)

    p = sub.add_parser("trace", help="record one rollout's normalized observations to CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--env", required=True, choices=ENV_NAMES)
    p.add_argument("--seed", type=int, default=0, help="episode seed")
    p.add_argument("--out", required=True, help="CSV file to write")
    p.set_defaults(func=_cmd_trace)

    return parser


def _cmd_pretrain(args) -> int:
    doc = configio.read_config_dict(args.config, allow_pretrain_keys=True) if args.config else {}
    config = configio.pretrain_config_from_dict(doc, master_seed=args.seed)
    if args.quality:
        config.quality = args.quality
    policy = run_pretrain(args.env, config, workers=args.workers)
    save_checkpoint(policy, args.out)
    print(f"wrote {args.out} ({policy.param_count} parameters)")
    return 0


def _cmd_finetune(args) -> int:
    doc = configio.read_config_dict(args.config)
    if "env" not in doc:
        raise configio.ConfigError("finetune config must set `env`")
    env_name = doc["env"]
    if env_name not in ENV_NAMES:
        raise configio.ConfigError(f"unknown env {env_name!r} in config")
    config = configio.search_config_from_dict(doc, reward_mode_override=args.reward_mode)
    policy = load_checkpoint(args.infile)

    observer = None
    if args.progress:
        def observer(record, _outcomes):
            print(json.dumps(record.progress_dict()), flush=True)

    tuned, _history = search.finetune(policy, env_name, config,
                                      workers=args.workers, observer=observer)
    save_checkpoint(tuned, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_eval(args) -> int:
    policy = load_checkpoint(args.infile)
    report = evaluation.monte_carlo_eval(policy, args.env, n_trials=args.trials,
                                         eval_seed_base=args.seed,
                                         with_dimension=args.dim)
    evaluation.save_report(report, args.out)
    print(evaluation.render_report(report))
    return 0


def _cmd_compare(args) -> int:
    baseline = evaluation.load_report(args.baseline)
    tuned = evaluation.load_report(args.tuned)
    cmp = evaluation.compare(baseline, tuned)
    print(evaluation.render_comparison(cmp))
    return 0


def _cmd_dim(args) -> int:
    points = rollout.read_trace_csv(args.trace)
    ladder = meshdim.MeshLadder(args.base, args.ratio, args.scales)
    estimate = meshdim.estimate_dimension(points, ladder)
    print(json.dumps(estimate.to_dict()))
    return 0


def _cmd_trace(args) -> int:
    policy = load_checkpoint(args.infile)
    env = make_env(args.env)
    result = rollout.run_episode(env, policy, args.seed, record_trace=True)
    rollout.write_trace_csv(args.out, result.trace)
    print(f"wrote {args.out} ({result.steps} steps, return {result.episode_return:.6g})")
    return 0


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    if getattr(args, "func", None) is None:
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except (PolicyTuneError, configio.ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())
