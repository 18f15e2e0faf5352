"""Bandit environment simulation and the sequential safety inspectors.

Two inspection rules are provided: the flawless rule removes an arm on its
first zero return, the relaxed rule removes an arm when its zero count crosses
the sequential test threshold. A third entry point delegates arm selection to
an arbitrary inner policy while keeping the discard gate unchanged.

Each arm draws from its own random stream derived from (master seed, arm
index), so an arm's outcome sequence does not depend on the order in which
arms are selected. This makes per-arm verdicts replayable in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import core, metrics
from .errors import (
    EmptySurvivingSet,
    IndexOutOfRange,
    InvalidParameter,
    PolicyViolation,
)
from .metrics import RunTrace

_ARM_BLOCK = 256
_SELECT_BLOCK = 1024


class BanditEnv:
    """N Bernoulli arms with independent per-arm random streams.

    ``safe_threshold`` optionally overrides the truth label threshold used
    when traces are built; by default the label comes from the run's config
    (or 1.0 in flawless mode).
    """

    def __init__(self, arm_params, seed=None, safe_threshold: float | None = None):
        params = [float(m) for m in arm_params]
        if not params:
            raise InvalidParameter("need at least one arm")
        for m in params:
            if not 0.0 <= m <= 1.0:
                raise InvalidParameter(f"arm mean must lie in [0, 1], got {m}")
        self.arm_params = params
        self.seed = seed
        self.safe_threshold = safe_threshold
        root = (
            seed
            if isinstance(seed, np.random.SeedSequence)
            else np.random.SeedSequence(seed)
        )
        kids = root.spawn(len(params) + 1)
        self._arm_rngs = [np.random.default_rng(k) for k in kids[:-1]]
        self._select_rng = np.random.default_rng(kids[-1])
        self._buffers: list[list[int]] = [[] for _ in params]
        self._positions = [0] * len(params)
        self._select_buf: list[float] = []
        self._select_pos = 0

    @property
    def num_arms(self) -> int:
        return len(self.arm_params)

    def pull(self, arm: int) -> int:
        """Draw the next outcome of ``arm`` from its own stream."""
        if not 0 <= arm < len(self.arm_params):
            raise IndexOutOfRange(
                f"arm {arm} out of range for {len(self.arm_params)} arms"
            )
        pos = self._positions[arm]
        buf = self._buffers[arm]
        if pos >= len(buf):
            draws = self._arm_rngs[arm].random(_ARM_BLOCK) < self.arm_params[arm]
            buf = draws.astype(np.int8).tolist()
            self._buffers[arm] = buf
            pos = 0
        self._positions[arm] = pos + 1
        return buf[pos]

    def _select_index(self, n_choices: int) -> int:
        pos = self._select_pos
        buf = self._select_buf
        if pos >= len(buf):
            buf = self._select_rng.random(_SELECT_BLOCK).tolist()
            self._select_buf = buf
            pos = 0
        self._select_pos = pos + 1
        return int(buf[pos] * n_choices)

    def reseeded(self, seed) -> "BanditEnv":
        """Fresh environment with the same arms and new streams."""
        return BanditEnv(self.arm_params, seed, self.safe_threshold)


class SurvivingSet:
    """Ordered set of still-active arm indices; only ever shrinks."""

    __slots__ = ("_arms", "_member")

    def __init__(self, n_arms: int):
        self._arms = list(range(n_arms))
        self._member = [True] * n_arms

    def __len__(self) -> int:
        return len(self._arms)

    def __contains__(self, arm) -> bool:
        return 0 <= arm < len(self._member) and self._member[arm]

    def __iter__(self):
        return iter(self._arms)

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(self._arms)

    def remove(self, arm: int) -> None:
        if not self._member[arm]:
            raise InvalidParameter(f"arm {arm} is not in the surviving set")
        self._member[arm] = False
        self._arms.remove(arm)


@dataclass(frozen=True)
class HistoryView:
    """Read-only per-arm pull summary handed to inner policies."""

    t: int
    pulls: Sequence[int]
    zeros: Sequence[int]

    def mean(self, arm: int) -> float:
        """Empirical success rate, optimistically 1.0 for unpulled arms."""
        p = self.pulls[arm]
        if p == 0:
            return 1.0
        return (p - self.zeros[arm]) / p


#: An inner policy maps (surviving set, history) to an arm index in the set.
PolicyHook = Callable[[SurvivingSet, HistoryView], int]


def greedy_mean_policy(surviving: SurvivingSet, history: HistoryView) -> int:
    """Demo inner policy: highest empirical mean, lowest index on ties."""
    best = -1
    best_mean = -1.0
    for a in surviving:
        m = history.mean(a)
        if m > best_mean:
            best, best_mean = a, m
    return best


class UniformPolicy:
    """Demo inner policy: uniform over the surviving set, own stream."""

    def __init__(self, seed=None):
        self._rng = np.random.default_rng(seed)

    def __call__(self, surviving: SurvivingSet, history: HistoryView) -> int:
        arms = surviving.as_tuple()
        return arms[int(self._rng.random() * len(arms))]


@dataclass
class InspectorState:
    """Mutable state of one inspector run."""

    config: core.SafetyConfig | None
    n_arms: int
    surviving: SurvivingSet
    pulls: list[int]
    zeros: list[int]
    log_lik: list[float]
    discard_pull: list[int]
    discard_step: list[int]
    last_pulled: list[int]
    t: int
    selected: list[int]
    outcomes: list[int]
    kmin: list[int] | None

    def arm_state(self, arm: int) -> core.ArmState:
        """The arm's accumulator as a core value object."""
        dp = self.discard_pull[arm]
        verdict = core.Verdict(at_pull=dp) if dp >= 0 else core.ACTIVE
        return core.ArmState(
            pulls=self.pulls[arm],
            zeros=self.zeros[arm],
            log_lik=self.log_lik[arm],
            verdict=verdict,
        )

    def history_view(self) -> HistoryView:
        return HistoryView(t=self.t, pulls=self.pulls, zeros=self.zeros)


def new_state(n_arms: int, config: core.SafetyConfig | None) -> InspectorState:
    kmin = None
    if config is not None:
        kmin = core.min_zeros_table(config, 1024).tolist()
    return InspectorState(
        config=config,
        n_arms=n_arms,
        surviving=SurvivingSet(n_arms),
        pulls=[0] * n_arms,
        zeros=[0] * n_arms,
        log_lik=[0.0] * n_arms,
        discard_pull=[-1] * n_arms,
        discard_step=[-1] * n_arms,
        last_pulled=[0] * n_arms,
        t=0,
        selected=[],
        outcomes=[],
        kmin=kmin,
    )


def _require_nonempty(state: InspectorState) -> list[int]:
    arms = state.surviving._arms
    if not arms:
        raise EmptySurvivingSet("every arm has been discarded")
    return arms


def step_flawless(env: BanditEnv, state: InspectorState) -> InspectorState:
    """One flawless-rule step: uniform pick, discard on a zero return."""
    arms = _require_nonempty(state)
    arm = arms[env._select_index(len(arms))]
    out = env.pull(arm)
    state.t += 1
    state.selected.append(arm)
    state.outcomes.append(out)
    state.last_pulled[arm] = state.t
    p = state.pulls[arm] + 1
    state.pulls[arm] = p
    if out == 0:
        state.zeros[arm] += 1
        state.discard_pull[arm] = p
        state.discard_step[arm] = state.t
        state.surviving.remove(arm)
    return state


def _observe_relaxed(
    env: BanditEnv, state: InspectorState, config: core.SafetyConfig, arm: int
) -> None:
    out = env.pull(arm)
    state.t += 1
    state.selected.append(arm)
    state.outcomes.append(out)
    state.last_pulled[arm] = state.t
    p = state.pulls[arm] + 1
    state.pulls[arm] = p
    if out == 0:
        z = state.zeros[arm] + 1
        state.zeros[arm] = z
        state.log_lik[arm] += config.lambda0
        kmin = state.kmin
        if p >= len(kmin):
            kmin = core.min_zeros_table(config, 2 * p).tolist()
            state.kmin = kmin
        # integer mirror of check_discard_count; the threshold can only be
        # newly met when the zero count increments
        if z >= kmin[p]:
            state.discard_pull[arm] = p
            state.discard_step[arm] = state.t
            state.surviving.remove(arm)
    else:
        state.log_lik[arm] -= config.lambda1


def step_relaxed(
    env: BanditEnv, state: InspectorState, config: core.SafetyConfig
) -> InspectorState:
    """One relaxed-rule step: uniform pick, sequential-test discard gate."""
    if config is not state.config:
        state.config = config
        state.kmin = core.min_zeros_table(config, max(1024, max(state.pulls) * 2)).tolist()
    arms = _require_nonempty(state)
    arm = arms[env._select_index(len(arms))]
    _observe_relaxed(env, state, config, arm)
    return state


def step_filtered(
    env: BanditEnv,
    state: InspectorState,
    config: core.SafetyConfig,
    policy: PolicyHook,
) -> InspectorState:
    """One policy-driven step with the unchanged discard gate.

    A round-robin fallback overrides the inner policy whenever an active arm
    has gone N steps without a pull, so that a starving policy cannot stall
    the detection of an unsafe arm.
    """
    if config is not state.config:
        state.config = config
        state.kmin = core.min_zeros_table(config, max(1024, max(state.pulls) * 2)).tolist()
    arms = _require_nonempty(state)
    t_next = state.t + 1
    n = state.n_arms
    last = state.last_pulled
    arm = -1
    overdue_at = t_next
    for a in arms:
        lp = last[a]
        if t_next - lp >= n and lp < overdue_at:
            overdue_at = lp
            arm = a
    if arm < 0:
        choice = policy(state.surviving, state.history_view())
        if not isinstance(choice, (int, np.integer)) or choice not in state.surviving:
            raise PolicyViolation(
                f"inner policy selected {choice!r}, which is not in the "
                f"surviving set {state.surviving.as_tuple()}"
            )
        arm = int(choice)
    _observe_relaxed(env, state, config, arm)
    return state


def run(
    env: BanditEnv,
    horizon: int,
    config: core.SafetyConfig | None = None,
    policy: PolicyHook | None = None,
    seed=None,
) -> RunTrace:
    """Drive an inspector for up to ``horizon`` steps and return its trace.

    ``config=None`` selects the flawless rule. The run stops early, and is
    recorded as exhausted, when every arm has been discarded. ``seed``
    optionally reseeds the environment first.
    """
    if horizon < 1:
        raise InvalidParameter(f"horizon must be >= 1, got {horizon}")
    if policy is not None and config is None:
        raise InvalidParameter("an inner policy requires a relaxed config")
    if seed is not None:
        env = env.reseeded(seed)
    state = new_state(env.num_arms, config)
    surviving = state.surviving
    if config is None:
        mode = "flawless"
        while state.t < horizon and len(surviving):
            step_flawless(env, state)
    elif policy is None:
        mode = "relaxed"
        while state.t < horizon and len(surviving):
            step_relaxed(env, state, config)
    else:
        mode = "filtered"
        while state.t < horizon and len(surviving):
            step_filtered(env, state, config, policy)
    return build_trace(env, state, config, horizon, mode)


def build_trace(
    env: BanditEnv,
    state: InspectorState,
    config: core.SafetyConfig | None,
    horizon: int,
    mode: str,
) -> RunTrace:
    """Assemble the immutable RunTrace from a finished (or stopped) state."""
    mu_arr = np.asarray(env.arm_params, dtype=np.float64)
    if config is None:
        mu_label = env.safe_threshold if env.safe_threshold is not None else 1.0
        safe_cut = mu_label
    else:
        mu_label = env.safe_threshold if env.safe_threshold is not None else config.mu
        safe_cut = mu_label + config.epsilon
    steps = state.t
    selected = np.asarray(state.selected, dtype=np.int32)
    outcomes = np.asarray(state.outcomes, dtype=np.int8)
    discard_step = np.asarray(state.discard_step, dtype=np.int64)
    discard_pull = np.asarray(state.discard_pull, dtype=np.int64)
    unsafe = mu_arr < mu_label
    safe = metrics.safe_mask_for(mu_arr, safe_cut)
    handicap_counts = np.cumsum(unsafe[selected]).astype(np.int64)
    events = discard_step[discard_step > 0] - 1
    surviving_curve = len(mu_arr) - np.cumsum(
        np.bincount(events, minlength=steps)[:steps]
    ).astype(np.int64)
    safe_events = discard_step[(discard_step > 0) & safe] - 1
    safe_active = int(safe.sum()) - np.cumsum(
        np.bincount(safe_events, minlength=steps)[:steps]
    ).astype(np.int64)
    return RunTrace(
        mode=mode,
        arm_mus=mu_arr,
        mu_label=float(mu_label),
        safe_cut=float(safe_cut),
        horizon=horizon,
        steps=steps,
        selected=selected,
        outcomes=outcomes,
        surviving=surviving_curve,
        handicap_counts=handicap_counts,
        safe_active=safe_active,
        pulls=np.asarray(state.pulls, dtype=np.int64),
        zeros=np.asarray(state.zeros, dtype=np.int64),
        log_lik=np.asarray(state.log_lik, dtype=np.float64),
        discard_pull=discard_pull,
        discard_step=discard_step,
        exhausted=len(state.surviving) == 0,
        censored=bool(np.any(unsafe & (discard_step < 0))),
    )
