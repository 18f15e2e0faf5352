"""Command-line front end: bound calculators, single runs, and experiments.

Exit codes: 0 success, 1 invalid configuration or flags, 2 runtime failure.
Flag names mirror the test design symbols (--mu, --eps, --alpha). Every
successful invocation writes a metadata sidecar into the output directory
(flag --out, else $SAFEBANDIT_OUT, else ./safebandit-out) so that the run can
be reproduced exactly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__, core, engine, experiments
from .errors import ConfigError, SafebanditError

_EXP1_DEFAULTS = {
    "arms": 100,
    "arm_law": {"kind": "uniform", "low": 0.8, "high": 1.0},
    "mu": 0.9,
    "epsilon": [0.05],
    "alpha": [0.01, 0.05, 0.1, 0.3],
    "replications": 16,
    "horizon": 100_000,
    "master_seed": 1,
    "algorithm": "relaxed",
}

_EXP2_DEFAULTS = dict(
    _EXP1_DEFAULTS,
    epsilon=[0.01, 0.02, 0.05, 0.09],
    alpha=[0.01, 0.05, 0.1],
)


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems as ConfigError (exit 1)."""

    def error(self, message):
        raise ConfigError(message)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _build_parser() -> _Parser:
    parser = _Parser(prog="safebandit", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    bounds = sub.add_parser("bounds", help="print the analytic test constants")
    bounds.add_argument("--mu", type=float, required=True)
    bounds.add_argument("--eps", type=float, required=True)
    bounds.add_argument("--alpha", type=float, required=True)
    bounds.add_argument("--unsafe", type=int, default=None,
                        help="also print the total handicap bound for this many unsafe arms")
    bounds.add_argument("--out", default=None)

    trace = sub.add_parser("trace", help="single relaxed run, per-pull trace file")
    trace.add_argument("--arms", required=True,
                       help="comma-separated true arm means, e.g. 0.8,0.8,0.8")
    trace.add_argument("--mu", type=float, required=True)
    trace.add_argument("--eps", type=float, required=True)
    trace.add_argument("--alpha", type=float, required=True)
    trace.add_argument("--seed", type=int, default=0)
    trace.add_argument("--horizon", type=int, default=100_000)
    trace.add_argument("--out", default=None)

    sim = sub.add_parser("simulate", help="single run, per-step record file")
    sim.add_argument("--arms", default=None, help="comma-separated true arm means")
    sim.add_argument("--n", type=int, default=None, help="arm count for --law")
    sim.add_argument("--law", default=None, help="uniform:LO,HI arm sampling law")
    sim.add_argument("--algorithm", default="relaxed",
                     choices=sorted(experiments.ALGORITHMS))
    sim.add_argument("--mu", type=float, default=None)
    sim.add_argument("--eps", type=float, default=None)
    sim.add_argument("--alpha", type=float, default=None)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--horizon", type=int, default=100_000)
    sim.add_argument("--out", default=None)

    for name, help_text in (
        ("exp1", "transient curves and testing-time files over an alpha grid"),
        ("exp2", "terminal-value sweep over an (epsilon, alpha) grid"),
    ):
        exp = sub.add_parser(name, help=help_text)
        exp.add_argument("--config", default=None, help="JSON experiment spec")
        exp.add_argument("--n", type=int, default=None)
        exp.add_argument("--law", default=None)
        exp.add_argument("--mu", type=float, default=None)
        exp.add_argument("--eps", type=_float_list, default=None)
        exp.add_argument("--alpha", type=_float_list, default=None)
        exp.add_argument("--reps", type=int, default=None)
        exp.add_argument("--horizon", type=int, default=None)
        exp.add_argument("--seed", type=int, default=None)
        exp.add_argument("--workers", type=int, default=None)
        exp.add_argument("--out", default=None)
    return parser


def _out_dir(flag_value) -> Path:
    if flag_value:
        out = Path(flag_value)
    elif os.environ.get("SAFEBANDIT_OUT"):
        out = Path(os.environ["SAFEBANDIT_OUT"])
    else:
        out = Path("safebandit-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_sidecar(out: Path, name: str, payload: dict) -> Path:
    path = out / name
    payload = dict(payload, package_version=__version__)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
    return path


def _parse_law(text: str) -> dict:
    kind, _, rest = text.partition(":")
    if kind != "uniform":
        raise ConfigError(f"unknown arm law {text!r}, expected uniform:LO,HI")
    lo_hi = _float_list(rest)
    if len(lo_hi) != 2:
        raise ConfigError(f"arm law needs two bounds, got {text!r}")
    return {"kind": "uniform", "low": lo_hi[0], "high": lo_hi[1]}


def _cmd_bounds(args) -> int:
    config = core.make_config(args.mu, args.eps, args.alpha)
    kl = core.kl_divergence(config)
    bound = core.detection_time_bound(config)
    print(f"lambda0         = {config.lambda0:.7g}")
    print(f"lambda1         = {config.lambda1:.7g}")
    print(f"log_threshold   = {config.log_threshold:.7g}")
    print(f"kl_divergence   = {kl:.7g}")
    print(f"detection_bound = {bound:.7g}")
    if args.unsafe is not None:
        total = core.handicap_bound_relaxed(config, args.unsafe)
        print(f"handicap_bound  = {total:.7g}")
    out = _out_dir(args.out)
    _write_sidecar(
        out,
        "bounds_meta.json",
        {
            "command": "bounds",
            "mu": args.mu,
            "eps": args.eps,
            "alpha": args.alpha,
            "unsafe": args.unsafe,
            "outputs": {
                "lambda0": config.lambda0,
                "lambda1": config.lambda1,
                "log_threshold": config.log_threshold,
                "kl_divergence": kl,
                "detection_bound": bound,
            },
        },
    )
    return 0


def _cmd_trace(args) -> int:
    mus = _float_list(args.arms)
    if not mus:
        raise ConfigError("--arms must name at least one arm")
    config = core.make_config(args.mu, args.eps, args.alpha)
    env = engine.BanditEnv(mus, seed=args.seed)
    trace = engine.run(env, args.horizon, config=config)
    out = _out_dir(args.out)
    trace_path = out / "trace.csv"
    experiments.write_trace_csv(trace, config, trace_path)
    _write_sidecar(
        out,
        "trace_meta.json",
        {
            "command": "trace",
            "arms": mus,
            "mu": args.mu,
            "eps": args.eps,
            "alpha": args.alpha,
            "seed": args.seed,
            "horizon": args.horizon,
            "lambda0": config.lambda0,
            "lambda1": config.lambda1,
            "log_threshold": config.log_threshold,
            "steps": trace.steps,
            "discard_pull": trace.discard_pull.tolist(),
        },
    )
    discarded = int((trace.discard_pull >= 0).sum())
    print(f"ran {trace.steps} steps; discarded {discarded}/{len(mus)} arms")
    print(f"wrote {trace_path}")
    return 0


def _cmd_simulate(args) -> int:
    if args.arms is not None:
        mus = _float_list(args.arms)
    elif args.n is not None and args.law is not None:
        import numpy as np

        law = _parse_law(args.law)
        rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(0,)))
        mus = rng.uniform(law["low"], law["high"], args.n).tolist()
    else:
        raise ConfigError("simulate needs --arms, or --n together with --law")
    config = None
    policy = None
    if args.algorithm != "flawless":
        if args.mu is None or args.eps is None or args.alpha is None:
            raise ConfigError(
                f"algorithm {args.algorithm!r} needs --mu, --eps and --alpha"
            )
        config = core.make_config(args.mu, args.eps, args.alpha)
    if args.algorithm == "filtered:greedy":
        policy = engine.greedy_mean_policy
    elif args.algorithm == "filtered:uniform":
        import numpy as np

        policy = engine.UniformPolicy(np.random.SeedSequence(args.seed, spawn_key=(1,)))
    env = engine.BanditEnv(mus, seed=args.seed)
    trace = engine.run(env, args.horizon, config=config, policy=policy)
    out = _out_dir(args.out)
    run_path = out / "run.csv"
    experiments.write_run_csv(trace, run_path)
    _write_sidecar(
        out,
        "simulate_meta.json",
        {
            "command": "simulate",
            "arms": mus,
            "algorithm": args.algorithm,
            "mu": args.mu,
            "eps": args.eps,
            "alpha": args.alpha,
            "seed": args.seed,
            "horizon": args.horizon,
            "steps": trace.steps,
            "exhausted": trace.exhausted,
            "censored": trace.censored,
        },
    )
    print(f"ran {trace.steps} steps; wrote {run_path}")
    return 0


def _spec_from_args(args, defaults: dict) -> experiments.ExperimentSpec:
    if args.config is not None:
        base = experiments.ExperimentSpec.from_json(args.config).to_dict()
        source = f"config file {args.config}"
    else:
        base = dict(defaults)
        source = "built-in defaults"
    overrides = {
        "arms": args.n,
        "arm_law": _parse_law(args.law) if args.law else None,
        "mu": args.mu,
        "epsilon": args.eps,
        "alpha": args.alpha,
        "replications": args.reps,
        "horizon": args.horizon,
        "master_seed": args.seed,
        "workers": args.workers,
    }
    for key, value in overrides.items():
        if value is None:
            continue
        if key in base and base[key] is not None and base[key] != value:
            print(
                f"note: flag value {key}={value!r} overrides {source} "
                f"value {base[key]!r}",
                file=sys.stderr,
            )
        base[key] = value
    base.pop("output_dir", None)
    return experiments.ExperimentSpec.from_dict(base)


def _print_cells(result: experiments.ResultSet) -> None:
    print("epsilon  alpha   nhandicap_inf  rho_inf   censored")
    for cell in result.cells:
        stats = cell.stats
        eps = "-" if cell.epsilon is None else f"{cell.epsilon:g}"
        alpha = "-" if cell.alpha is None else f"{cell.alpha:g}"
        print(
            f"{eps:<8s} {alpha:<7s} {stats.nhandicap_inf_mean:<14.6g} "
            f"{stats.rho_inf_mean:<9.6g} {int(stats.censored.sum())}"
        )


def _cmd_experiment(args, kind: str) -> int:
    defaults = _EXP1_DEFAULTS if kind == "experiment" else _EXP2_DEFAULTS
    spec = _spec_from_args(args, defaults)
    out = _out_dir(args.out)
    spec.output_dir = str(out)
    if kind == "experiment":
        result = experiments.run_experiment(spec)
    else:
        result = experiments.sweep(spec)
    _print_cells(result)
    print(f"wrote results under {out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "bounds":
            return _cmd_bounds(args)
        if args.command == "trace":
            return _cmd_trace(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "exp1":
            return _cmd_experiment(args, "experiment")
        return _cmd_experiment(args, "sweep")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SafebanditError as exc:
        if isinstance(exc, ValueError):
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
