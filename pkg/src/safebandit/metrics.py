"""Run traces and the three figures of merit: handicap, safety ratio,
testing time, plus the analytic bound overlays used for comparison plots.

An arm counts toward the handicap when its true mean lies below the safety
threshold mu; it counts as safe for the safety ratio when its true mean is at
least mu + epsilon. Arms in the gap [mu, mu+epsilon) belong to neither group
and are reported separately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import core
from .errors import InvalidParameter, NoSafeArms

# The safe cut is the float sum mu + epsilon; give the ground-truth label a
# one-ulp-scale tolerance so that a nominal boundary arm (0.95 against
# 0.9 + 0.05 = 0.9500000000000001) is not pushed into the gap by rounding.
_CUT_RTOL = 1e-12


def safe_mask_for(arm_mus, safe_cut: float) -> np.ndarray:
    """Ground-truth "safe" label: true mean at or above the safe cut."""
    return np.asarray(arm_mus, dtype=np.float64) >= safe_cut * (1.0 - _CUT_RTOL)


@dataclass
class RunTrace:
    """Complete record of one inspector run.

    Per-step arrays have length ``steps`` (the executed steps, which is less
    than ``horizon`` only when every arm was discarded early). Per-arm arrays
    have one entry per arm; ``discard_pull``/``discard_step`` are -1 for arms
    still active at the end.
    """

    mode: str
    arm_mus: np.ndarray
    mu_label: float
    safe_cut: float
    horizon: int
    steps: int
    selected: np.ndarray
    outcomes: np.ndarray
    surviving: np.ndarray
    handicap_counts: np.ndarray
    safe_active: np.ndarray
    pulls: np.ndarray
    zeros: np.ndarray
    log_lik: np.ndarray
    discard_pull: np.ndarray
    discard_step: np.ndarray
    exhausted: bool
    censored: bool

    @property
    def num_arms(self) -> int:
        return len(self.arm_mus)

    @property
    def unsafe_mask(self) -> np.ndarray:
        return self.arm_mus < self.mu_label

    @property
    def safe_mask(self) -> np.ndarray:
        return safe_mask_for(self.arm_mus, self.safe_cut)

    @property
    def gap_mask(self) -> np.ndarray:
        return ~self.unsafe_mask & ~self.safe_mask

    @property
    def last_discard_step(self) -> int:
        """Step of the final discard event, 0 if nothing was discarded."""
        if np.all(self.discard_step < 0):
            return 0
        return int(self.discard_step.max())


def handicap(trace: RunTrace, t: int) -> int:
    """Number of pulls of truth-unsafe arms during the first t steps."""
    if not 0 <= t <= trace.steps:
        raise InvalidParameter(f"t must lie in [0, {trace.steps}], got {t}")
    if t == 0:
        return 0
    return int(trace.handicap_counts[t - 1])


def safety_ratio(trace: RunTrace, t: int) -> float:
    """Fraction of truth-safe arms still surviving after t steps."""
    n_safe = int(trace.safe_mask.sum())
    if n_safe == 0:
        raise NoSafeArms(
            f"no arm has true mean >= {trace.safe_cut}; the ratio is undefined"
        )
    if not 0 <= t <= trace.steps:
        raise InvalidParameter(f"t must lie in [0, {trace.steps}], got {t}")
    if t == 0:
        return 1.0
    return float(trace.safe_active[t - 1]) / n_safe


def testing_time(trace: RunTrace, arm: int, t: int | None = None) -> int:
    """Pulls of ``arm`` during the first t steps (whole run by default)."""
    if not 0 <= arm < trace.num_arms:
        raise InvalidParameter(f"arm index {arm} out of range")
    if t is None:
        return int(trace.pulls[arm])
    if not 0 <= t <= trace.steps:
        raise InvalidParameter(f"t must lie in [0, {trace.steps}], got {t}")
    return int(np.count_nonzero(trace.selected[:t] == arm))


@dataclass(frozen=True)
class BoundSet:
    """Analytic bounds evaluated against a known arm population."""

    per_arm_bound: float
    handicap_bound: float
    nhandicap_bound: float
    rho_bound: float
    num_unsafe: int
    num_gap: int
    num_safe: int


def bound_overlay(config: core.SafetyConfig, arm_mus: np.ndarray) -> BoundSet:
    """Bounds for plotting next to empirical curves, given ground truth.

    The handicap bound is M * (1 + log(1/alpha)/KL) with M the number of
    truth-unsafe arms; the safety-ratio line is 1 - alpha.
    """
    arm_mus = np.asarray(arm_mus, dtype=np.float64)
    per_arm = core.detection_time_bound(config)
    m_unsafe = int(np.count_nonzero(arm_mus < config.mu))
    n_safe = int(np.count_nonzero(safe_mask_for(arm_mus, config.mu + config.epsilon)))
    n_gap = len(arm_mus) - m_unsafe - n_safe
    total = core.handicap_bound_relaxed(config, m_unsafe)
    return BoundSet(
        per_arm_bound=per_arm,
        handicap_bound=total,
        nhandicap_bound=total / max(len(arm_mus), 1),
        rho_bound=1.0 - config.alpha,
        num_unsafe=m_unsafe,
        num_gap=n_gap,
        num_safe=n_safe,
    )


@dataclass
class AggregateStats:
    """Replication means and spreads for one experiment grid point.

    Curves are padded to the horizon with their final value so that runs that
    exhausted the arm set early still contribute a full-length series. The
    "inf" quantities are read off at the last discard step of each run; runs
    where a truth-unsafe arm survived to the horizon are flagged censored.
    """

    horizon: int
    num_arms: int
    reps: int
    nhandicap_mean: np.ndarray
    nhandicap_stderr: np.ndarray
    rho_mean: np.ndarray | None
    rho_stderr: np.ndarray | None
    nhandicap_inf: np.ndarray
    rho_inf: np.ndarray
    testing_times: list[np.ndarray]
    testing_time_mus: list[np.ndarray]
    num_unsafe: np.ndarray
    num_gap: np.ndarray
    num_safe: np.ndarray
    censored: np.ndarray

    @property
    def nhandicap_inf_mean(self) -> float:
        return float(self.nhandicap_inf.mean())

    @property
    def nhandicap_inf_stderr(self) -> float:
        return _stderr(self.nhandicap_inf)

    @property
    def rho_inf_mean(self) -> float:
        vals = self.rho_inf[~np.isnan(self.rho_inf)]
        return float(vals.mean()) if vals.size else float("nan")

    @property
    def rho_inf_stderr(self) -> float:
        vals = self.rho_inf[~np.isnan(self.rho_inf)]
        return _stderr(vals) if vals.size else float("nan")


def _stderr(values: np.ndarray) -> float:
    if values.size <= 1:
        return 0.0
    return float(values.std(ddof=1) / np.sqrt(values.size))


def _padded_curve(values: np.ndarray, horizon: int) -> np.ndarray:
    if len(values) == horizon:
        return values
    out = np.empty(horizon, dtype=np.float64)
    out[: len(values)] = values
    out[len(values):] = values[-1] if len(values) else 0.0
    return out


def aggregate(traces: list[RunTrace], horizon: int) -> AggregateStats:
    """Collapse replications of one grid point into curve means and terminal
    statistics."""
    if not traces:
        raise InvalidParameter("need at least one trace to aggregate")
    n = traces[0].num_arms
    reps = len(traces)
    nh_curves = np.empty((reps, horizon), dtype=np.float64)
    rho_curves = np.full((reps, horizon), np.nan, dtype=np.float64)
    nh_inf = np.empty(reps)
    rho_inf = np.full(reps, np.nan)
    tt: list[np.ndarray] = []
    tt_mus: list[np.ndarray] = []
    counts = np.empty((reps, 3), dtype=np.int64)
    censored = np.zeros(reps, dtype=bool)
    any_safe = False
    for i, tr in enumerate(traces):
        nh_curves[i] = _padded_curve(
            tr.handicap_counts.astype(np.float64) / n, horizon
        )
        n_safe = int(tr.safe_mask.sum())
        if n_safe > 0:
            any_safe = True
            rho_curves[i] = _padded_curve(
                tr.safe_active.astype(np.float64) / n_safe, horizon
            )
        settle = tr.last_discard_step
        nh_inf[i] = handicap(tr, min(settle, tr.steps)) / n
        if n_safe > 0:
            rho_inf[i] = safety_ratio(tr, min(settle, tr.steps))
        unsafe = tr.unsafe_mask
        done = unsafe & (tr.discard_pull >= 0)
        pulls = np.where(tr.discard_pull >= 0, tr.discard_pull, tr.pulls)
        tt.append(pulls[done].astype(np.int64))
        tt_mus.append(tr.arm_mus[done])
        counts[i] = (unsafe.sum(), tr.gap_mask.sum(), n_safe)
        censored[i] = tr.censored
    return AggregateStats(
        horizon=horizon,
        num_arms=n,
        reps=reps,
        nhandicap_mean=nh_curves.mean(axis=0),
        nhandicap_stderr=_curve_stderr(nh_curves),
        rho_mean=np.nanmean(rho_curves, axis=0) if any_safe else None,
        rho_stderr=_curve_stderr(rho_curves) if any_safe else None,
        nhandicap_inf=nh_inf,
        rho_inf=rho_inf,
        testing_times=tt,
        testing_time_mus=tt_mus,
        num_unsafe=counts[:, 0],
        num_gap=counts[:, 1],
        num_safe=counts[:, 2],
        censored=censored,
    )


def _curve_stderr(curves: np.ndarray) -> np.ndarray:
    reps = curves.shape[0]
    if reps <= 1:
        return np.zeros(curves.shape[1])
    with np.errstate(invalid="ignore"):
        return np.nanstd(curves, axis=0, ddof=1) / np.sqrt(reps)
