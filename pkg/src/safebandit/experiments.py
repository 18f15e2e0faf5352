"""Monte Carlo orchestration: replicated inspector runs over (epsilon, alpha)
grids, aggregation, and CSV/JSON persistence.

Seeding gives common random numbers across grid points: each replication owns
one seed derived from (master_seed, replication index), and every grid point
replays the same arm population and the same per-arm outcome streams. This
keeps replication results independent of execution order and makes grid
comparisons paired rather than independent.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, core, metrics
from .engine import BanditEnv, UniformPolicy, greedy_mean_policy, run
from .errors import ConfigError, InvalidParameter, IoError

ALGORITHMS = ("flawless", "relaxed", "filtered:greedy", "filtered:uniform")

CURVE_COLUMNS = ("t", "mean", "stderr", "bound")
TESTING_TIME_COLUMNS = ("rep", "arm_mu", "testing_time", "bound", "empirical_mean")
SWEEP_COLUMNS = (
    "epsilon",
    "alpha",
    "nhandicap_inf",
    "nhandicap_stderr",
    "rho_inf",
    "rho_stderr",
    "nhandicap_bound",
    "rho_bound",
    "censored_reps",
)
TRACE_COLUMNS = ("step", "arm", "pull", "outcome", "zeros", "log_lik")
RUN_COLUMNS = ("t", "arm", "outcome", "surviving", "handicap", "rho")

_SPEC_KEYS = {
    "arms",
    "arm_law",
    "mu",
    "epsilon",
    "alpha",
    "replications",
    "horizon",
    "master_seed",
    "algorithm",
    "output_dir",
    "workers",
}


def _as_grid(value) -> tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return (float(value),)


@dataclass
class ExperimentSpec:
    """Sweep definition: arm population, design grids, replications, seeds."""

    arms: int
    arm_law: dict
    mu: float
    epsilon: float | list | tuple
    alpha: float | list | tuple
    replications: int
    horizon: int
    master_seed: int
    algorithm: str = "relaxed"
    output_dir: str | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.arms < 1:
            raise ConfigError(f"arms must be >= 1, got {self.arms}")
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(
                f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}"
            )
        law = self.arm_law
        if not isinstance(law, dict) or "kind" not in law:
            raise ConfigError("arm_law must be a dict with a 'kind' field")
        if law["kind"] == "explicit":
            values = law.get("values")
            if not isinstance(values, (list, tuple)) or len(values) != self.arms:
                raise ConfigError(
                    f"explicit arm_law needs exactly {self.arms} values"
                )
            if any(not 0.0 <= float(v) <= 1.0 for v in values):
                raise ConfigError("explicit arm means must lie in [0, 1]")
        elif law["kind"] == "uniform":
            lo, hi = law.get("low"), law.get("high")
            if lo is None or hi is None or not 0.0 <= lo < hi <= 1.0:
                raise ConfigError(
                    "uniform arm_law needs 0 <= low < high <= 1"
                )
        else:
            raise ConfigError(f"unknown arm_law kind {law['kind']!r}")
        if not self.epsilon_grid or not self.alpha_grid:
            raise ConfigError("epsilon and alpha grids must be nonempty")
        if self.algorithm != "flawless":
            for eps in self.epsilon_grid:
                for alpha in self.alpha_grid:
                    try:
                        core.make_config(self.mu, eps, alpha)
                    except InvalidParameter as exc:
                        raise ConfigError(
                            f"grid point (epsilon={eps}, alpha={alpha}): {exc}"
                        ) from exc

    @property
    def epsilon_grid(self) -> tuple[float, ...]:
        return _as_grid(self.epsilon)

    @property
    def alpha_grid(self) -> tuple[float, ...]:
        return _as_grid(self.alpha)

    @property
    def grid(self) -> tuple[tuple[float, float], ...]:
        return tuple(
            (eps, alpha) for eps in self.epsilon_grid for alpha in self.alpha_grid
        )

    def to_dict(self) -> dict:
        return {
            "arms": self.arms,
            "arm_law": self.arm_law,
            "mu": self.mu,
            "epsilon": list(self.epsilon_grid),
            "alpha": list(self.alpha_grid),
            "replications": self.replications,
            "horizon": self.horizon,
            "master_seed": self.master_seed,
            "algorithm": self.algorithm,
            "output_dir": self.output_dir,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        if not isinstance(data, dict):
            raise ConfigError("experiment spec must be a JSON object")
        unknown = sorted(set(data) - _SPEC_KEYS)
        if unknown:
            raise ConfigError(f"unknown spec keys: {', '.join(unknown)}")
        missing = sorted(
            {"arms", "arm_law", "mu", "epsilon", "alpha", "replications",
             "horizon", "master_seed"} - set(data)
        )
        if missing:
            raise ConfigError(f"missing spec keys: {', '.join(missing)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


@dataclass
class CellResult:
    """Aggregates and bound overlays for one (epsilon, alpha) grid point."""

    epsilon: float | None
    alpha: float | None
    stats: metrics.AggregateStats
    nhandicap_bound: float
    rho_bound: float
    per_arm_bound: float | None
    mean_testing_time: float

    @property
    def tag(self) -> str:
        if self.epsilon is None:
            return "flawless"
        return f"eps{self.epsilon:g}_alpha{self.alpha:g}"


@dataclass
class ResultSet:
    """All grid point aggregates of one experiment plus reproduction metadata."""

    spec: ExperimentSpec
    kind: str
    cells: list[CellResult]
    metadata: dict = field(default_factory=dict)


def _rep_seeds(spec: ExperimentSpec, rep: int):
    root = np.random.SeedSequence(spec.master_seed, spawn_key=(rep,))
    return root.spawn(3)  # arm-parameter rng, environment, inner policy


def _rep_env(spec: ExperimentSpec, rep: int) -> BanditEnv:
    params_seed, env_seed, _ = _rep_seeds(spec, rep)
    law = spec.arm_law
    if law["kind"] == "explicit":
        mus = [float(v) for v in law["values"]]
    else:
        rng = np.random.default_rng(params_seed)
        mus = rng.uniform(law["low"], law["high"], spec.arms).tolist()
    return BanditEnv(mus, seed=env_seed)


def _run_cell_rep(spec: ExperimentSpec, cell_index: int, rep: int) -> metrics.RunTrace:
    eps, alpha = spec.grid[cell_index]
    env = _rep_env(spec, rep)
    if spec.algorithm == "flawless":
        return run(env, spec.horizon)
    config = core.make_config(spec.mu, eps, alpha)
    if spec.algorithm == "relaxed":
        return run(env, spec.horizon, config=config)
    if spec.algorithm == "filtered:greedy":
        return run(env, spec.horizon, config=config, policy=greedy_mean_policy)
    policy = UniformPolicy(_rep_seeds(spec, rep)[2])
    return run(env, spec.horizon, config=config, policy=policy)


def _cell_bounds(spec, eps, alpha, traces):
    """Per-rep bound overlays averaged over replications."""
    n = spec.arms
    if spec.algorithm == "flawless":
        per_rep = []
        for tr in traces:
            flawed = tr.arm_mus[tr.arm_mus < 1.0]
            per_rep.append(
                sum(core.testing_time_bound_flawless(m) for m in flawed) / n
            )
        return float(np.mean(per_rep)), 1.0, None
    config = core.make_config(spec.mu, eps, alpha)
    per_rep = [
        metrics.bound_overlay(config, tr.arm_mus).nhandicap_bound for tr in traces
    ]
    per_arm = core.detection_time_bound(config)
    return float(np.mean(per_rep)), 1.0 - alpha, per_arm


def _assemble_cell(spec, cell_index, traces) -> CellResult:
    eps, alpha = spec.grid[cell_index]
    stats = metrics.aggregate(traces, spec.horizon)
    nh_bound, rho_bound, per_arm = _cell_bounds(spec, eps, alpha, traces)
    all_tt = np.concatenate(stats.testing_times) if stats.testing_times else np.array([])
    mean_tt = float(all_tt.mean()) if all_tt.size else float("nan")
    if spec.algorithm == "flawless":
        eps_out, alpha_out = None, None
    else:
        eps_out, alpha_out = eps, alpha
    return CellResult(
        epsilon=eps_out,
        alpha=alpha_out,
        stats=stats,
        nhandicap_bound=nh_bound,
        rho_bound=rho_bound,
        per_arm_bound=per_arm,
        mean_testing_time=mean_tt,
    )


def _execute(spec: ExperimentSpec, kind: str) -> ResultSet:
    started = time.time()
    jobs = [
        (ci, rep)
        for ci in range(len(spec.grid))
        for rep in range(spec.replications)
    ]
    traces: dict[tuple[int, int], metrics.RunTrace] = {}
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            futures = {
                pool.submit(_run_cell_rep, spec, ci, rep): (ci, rep)
                for ci, rep in jobs
            }
            for fut, key in futures.items():
                traces[key] = fut.result()
    else:
        for ci, rep in jobs:
            traces[ci, rep] = _run_cell_rep(spec, ci, rep)
    cells = [
        _assemble_cell(
            spec, ci, [traces[ci, rep] for rep in range(spec.replications)]
        )
        for ci in range(len(spec.grid))
    ]
    result = ResultSet(
        spec=spec,
        kind=kind,
        cells=cells,
        metadata={
            "package_version": __version__,
            "master_seed": spec.master_seed,
            "spec": spec.to_dict(),
            "cells": [_cell_metadata(spec, c) for c in cells],
            "timing": {
                "started_unix": started,
                "wall_seconds": time.time() - started,
            },
        },
    )
    if spec.output_dir is not None:
        emit(result, "csv", spec.output_dir)
    return result


def _cell_metadata(spec, cell: CellResult) -> dict:
    meta = {
        "epsilon": cell.epsilon,
        "alpha": cell.alpha,
        "nhandicap_bound": cell.nhandicap_bound,
        "rho_bound": cell.rho_bound,
        "per_arm_bound": cell.per_arm_bound,
        "mean_testing_time": cell.mean_testing_time,
        "censored_reps": int(cell.stats.censored.sum()),
    }
    if cell.epsilon is not None:
        config = core.make_config(spec.mu, cell.epsilon, cell.alpha)
        meta.update(
            lambda0=config.lambda0,
            lambda1=config.lambda1,
            log_threshold=config.log_threshold,
            kl_divergence=core.kl_divergence(config),
        )
    return meta


def run_experiment(spec: ExperimentSpec) -> ResultSet:
    """Execute every grid point and replication; write files if an output
    directory is configured. Deterministic given master_seed."""
    return _execute(spec, "experiment")


def sweep(spec: ExperimentSpec) -> ResultSet:
    """Grid sweep producing terminal-value surfaces over (epsilon, alpha).

    Aggregates are identical to run_experiment; only the emitted files differ
    (the surface file, without per-step curve files).
    """
    return _execute(spec, "sweep")


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _curve_rows(mean, stderr, bound):
    for t in range(len(mean)):
        yield t + 1, mean[t], stderr[t], bound


def emit(results: ResultSet, format: str = "csv", out_dir=None) -> list[Path]:
    """Write result files and the metadata sidecar; returns written paths.

    CSV schemas (UTF-8, header row, '.' decimal):
      curve files      t, mean, stderr, bound
      testing times    rep, arm_mu, testing_time, bound, empirical_mean
      sweep surface    epsilon, alpha, nhandicap_inf, nhandicap_stderr,
                       rho_inf, rho_stderr, nhandicap_bound, rho_bound,
                       censored_reps
    """
    if format not in ("csv", "json"):
        raise ConfigError(f"format must be 'csv' or 'json', got {format!r}")
    out = Path(out_dir if out_dir is not None else results.spec.output_dir or ".")
    written: list[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if format == "json":
            path = out / "results.json"
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(_results_payload(results), fh, indent=1, sort_keys=True)
            written.append(path)
        else:
            written.extend(_emit_csv(results, out))
        meta_path = out / "metadata.json"
        with open(meta_path, "w", encoding="utf-8") as fh:
            json.dump(results.metadata, fh, indent=1, sort_keys=True)
        written.append(meta_path)
    except OSError as exc:
        raise IoError(f"failed writing results to {out}: {exc}") from exc
    return written


def _emit_csv(results: ResultSet, out: Path) -> list[Path]:
    written = []
    if results.kind == "experiment":
        for cell in results.cells:
            stats = cell.stats
            path = out / f"nhandicap_curve_{cell.tag}.csv"
            _write_csv(
                path,
                CURVE_COLUMNS,
                _curve_rows(
                    stats.nhandicap_mean, stats.nhandicap_stderr, cell.nhandicap_bound
                ),
            )
            written.append(path)
            if stats.rho_mean is not None:
                path = out / f"rho_curve_{cell.tag}.csv"
                _write_csv(
                    path,
                    CURVE_COLUMNS,
                    _curve_rows(stats.rho_mean, stats.rho_stderr, cell.rho_bound),
                )
                written.append(path)
            path = out / f"testing_times_{cell.tag}.csv"
            rows = []
            for rep, (tt, mus) in enumerate(
                zip(stats.testing_times, stats.testing_time_mus)
            ):
                for pulls, m in zip(tt, mus):
                    bound = (
                        cell.per_arm_bound
                        if cell.per_arm_bound is not None
                        else core.testing_time_bound_flawless(m)
                    )
                    rows.append((rep, m, pulls, bound, cell.mean_testing_time))
            _write_csv(path, TESTING_TIME_COLUMNS, rows)
            written.append(path)
    sweep_path = out / "sweep.csv"
    rows = []
    for cell in results.cells:
        stats = cell.stats
        rows.append(
            (
                cell.epsilon if cell.epsilon is not None else "",
                cell.alpha if cell.alpha is not None else "",
                stats.nhandicap_inf_mean,
                stats.nhandicap_inf_stderr,
                stats.rho_inf_mean,
                stats.rho_inf_stderr,
                cell.nhandicap_bound,
                cell.rho_bound,
                int(stats.censored.sum()),
            )
        )
    _write_csv(sweep_path, SWEEP_COLUMNS, rows)
    written.append(sweep_path)
    return written


def _results_payload(results: ResultSet) -> dict:
    cells = []
    for cell in results.cells:
        stats = cell.stats
        cells.append(
            {
                "epsilon": cell.epsilon,
                "alpha": cell.alpha,
                "nhandicap_mean": stats.nhandicap_mean.tolist(),
                "nhandicap_stderr": stats.nhandicap_stderr.tolist(),
                "rho_mean": None
                if stats.rho_mean is None
                else stats.rho_mean.tolist(),
                "rho_stderr": None
                if stats.rho_stderr is None
                else stats.rho_stderr.tolist(),
                "nhandicap_inf": stats.nhandicap_inf.tolist(),
                "rho_inf": stats.rho_inf.tolist(),
                "testing_times": [tt.tolist() for tt in stats.testing_times],
                "nhandicap_bound": cell.nhandicap_bound,
                "rho_bound": cell.rho_bound,
                "per_arm_bound": cell.per_arm_bound,
            }
        )
    return {"kind": results.kind, "spec": results.spec.to_dict(), "cells": cells}


def write_trace_csv(trace: metrics.RunTrace, config: core.SafetyConfig, path) -> None:
    """Per-pull log-likelihood and zero-count trace of every arm.

    Rows are replayed through the core accumulator in step order, so the
    emitted log_lik values are bit-identical to the engine's.
    """
    states = [core.ArmState() for _ in range(trace.num_arms)]
    rows = []
    for step in range(trace.steps):
        arm = int(trace.selected[step])
        out = int(trace.outcomes[step])
        states[arm] = core.update_log_lik(states[arm], config, out)
        st = states[arm]
        rows.append((step + 1, arm, st.pulls, out, st.zeros, st.log_lik))
    try:
        _write_csv(Path(path), TRACE_COLUMNS, rows)
    except OSError as exc:
        raise IoError(f"failed writing trace to {path}: {exc}") from exc


def write_run_csv(trace: metrics.RunTrace, path) -> None:
    """Per-step record of a single run: selection, outcome, surviving count,
    cumulative handicap, safety ratio (blank when undefined)."""
    n_safe = int(trace.safe_mask.sum())
    rows = []
    for t in range(trace.steps):
        rho = trace.safe_active[t] / n_safe if n_safe else ""
        rows.append(
            (
                t + 1,
                int(trace.selected[t]),
                int(trace.outcomes[t]),
                int(trace.surviving[t]),
                int(trace.handicap_counts[t]),
                rho,
            )
        )
    try:
        _write_csv(Path(path), RUN_COLUMNS, rows)
    except OSError as exc:
        raise IoError(f"failed writing run record to {path}: {exc}") from exc


def first_crossing_mc(
    mu_n: float,
    config: core.SafetyConfig,
    horizon: int,
    runs: int,
    seed=None,
    chunk: int = 512,
) -> np.ndarray:
    """Vectorized Monte Carlo of the single-arm discard time.

    Returns the pull index at which each of ``runs`` independent arms of mean
    ``mu_n`` is discarded, or -1 when no discard happens within ``horizon``
    pulls. Exploits that the threshold can only be crossed when a zero
    arrives, so only zero positions (geometric gaps) are simulated; the
    crossing condition evaluated at each zero is the count-form rule.
    """
    if not 0.0 <= mu_n <= 1.0:
        raise InvalidParameter(f"mu_n must lie in [0, 1], got {mu_n}")
    p = 1.0 - mu_n
    rng = np.random.default_rng(seed)
    crossing = np.full(runs, -1, dtype=np.int64)
    if p <= 0.0:
        return crossing
    scale = config.lambda0 + config.lambda1
    t_carry = np.zeros(runs, dtype=np.int64)
    alive = np.arange(runs)
    zeros_done = 0
    while alive.size:
        gaps = rng.geometric(p, size=(alive.size, chunk))
        pos = t_carry[alive, None] + np.cumsum(gaps, axis=1)
        counts = zeros_done + np.arange(1, chunk + 1, dtype=np.float64)
        ok = (
            counts[None, :]
            >= (config.log_threshold + config.lambda1 * pos) / scale
        ) & (pos <= horizon)
        hit = ok.any(axis=1)
        first = np.argmax(ok, axis=1)
        crossing[alive[hit]] = pos[hit, first[hit]]
        last_pos = pos[:, -1]
        t_carry[alive] = last_pos
        alive = alive[~hit & (last_pos <= horizon)]
        zeros_done += chunk
    return crossing
