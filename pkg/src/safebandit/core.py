"""Closed-form mathematics of the one-sided sequential Bernoulli safety test.

Everything here is a pure function of its inputs. The test design is the
triple (mu, epsilon, alpha): an arm is declared unsafe when the running
log-likelihood ratio of "mean <= mu" against "mean >= mu + epsilon" reaches
log(1/alpha). Because returns are binary, the decision can equivalently be
evaluated from the integer zero count, which is the authoritative form used
by the simulation engine (float accumulation is kept only for traces).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParameter, UpdateAfterDiscard


@dataclass(frozen=True)
class Verdict:
    """Discard status of an arm. ``at_pull`` is the pull count at discard."""

    at_pull: int | None = None

    @property
    def discarded(self) -> bool:
        return self.at_pull is not None


#: Shared "still active" verdict; discarding is absorbing, so the only other
#: values are ``Verdict(at_pull=k)``.
ACTIVE = Verdict()


@dataclass(frozen=True)
class SafetyConfig:
    """Test design (mu, epsilon, alpha) plus its derived constants.

    lambda0 is the log-likelihood gained per zero return, lambda1 the amount
    lost per one, and log_threshold = log(1/alpha) is the rejection level.
    """

    mu: float
    epsilon: float
    alpha: float
    lambda0: float = field(init=False)
    lambda1: float = field(init=False)
    log_threshold: float = field(init=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.mu < 1.0:
            raise InvalidParameter(f"mu must lie in (0, 1), got {self.mu}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParameter(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.epsilon <= 0.0:
            raise InvalidParameter(f"epsilon must be positive, got {self.epsilon}")
        if self.mu + self.epsilon >= 1.0:
            raise InvalidParameter(
                f"mu + epsilon must stay below 1, got {self.mu + self.epsilon}"
            )
        object.__setattr__(
            self, "lambda0", math.log((1.0 - self.mu) / (1.0 - self.mu - self.epsilon))
        )
        object.__setattr__(
            self, "lambda1", math.log((self.mu + self.epsilon) / self.mu)
        )
        object.__setattr__(self, "log_threshold", math.log(1.0 / self.alpha))


def make_config(mu: float, epsilon: float, alpha: float) -> SafetyConfig:
    """Build a validated test design with lambda0, lambda1 and log(1/alpha)."""
    return SafetyConfig(mu, epsilon, alpha)


@dataclass(frozen=True)
class ArmState:
    """Per-arm accumulator: pull count, zero count, running log-likelihood."""

    pulls: int = 0
    zeros: int = 0
    log_lik: float = 0.0
    verdict: Verdict = ACTIVE


def update_log_lik(state: ArmState, config: SafetyConfig, outcome: int) -> ArmState:
    """Fold one binary return into the arm's accumulator.

    A zero adds lambda0 to the log-likelihood ratio, a one subtracts lambda1.
    Raises UpdateAfterDiscard if the arm's verdict is already absorbing.
    """
    if state.verdict.discarded:
        raise UpdateAfterDiscard(
            f"arm was discarded at pull {state.verdict.at_pull}"
        )
    if outcome == 0:
        return replace(
            state,
            pulls=state.pulls + 1,
            zeros=state.zeros + 1,
            log_lik=state.log_lik + config.lambda0,
        )
    if outcome == 1:
        return replace(
            state, pulls=state.pulls + 1, log_lik=state.log_lik - config.lambda1
        )
    raise InvalidParameter(f"outcome must be 0 or 1, got {outcome!r}")


def check_discard_loglik(state: ArmState, config: SafetyConfig) -> Verdict:
    """Likelihood-ratio decision: discard when log_lik >= log(1/alpha).

    The comparison is inclusive; a state sitting exactly on the threshold is
    discarded.
    """
    if state.log_lik >= config.log_threshold:
        return Verdict(at_pull=state.pulls)
    return ACTIVE


def count_threshold(pulls: int, config: SafetyConfig) -> float:
    """Zero count at which ``pulls`` observations trigger rejection."""
    return (config.log_threshold + config.lambda1 * pulls) / (
        config.lambda0 + config.lambda1
    )


def check_discard_count(pulls: int, zeros: int, config: SafetyConfig) -> Verdict:
    """Integer-count decision, equivalent to the likelihood-ratio form.

    Discards iff zeros >= (log(1/alpha) + lambda1 * pulls) / (lambda0 + lambda1).
    This is the authoritative rule used by the engine; counts are exact where
    a repeatedly accumulated float may not be.
    """
    if pulls < 0 or zeros < 0 or zeros > pulls:
        raise InvalidParameter(f"need 0 <= zeros <= pulls, got {zeros}/{pulls}")
    if zeros >= count_threshold(pulls, config):
        return Verdict(at_pull=pulls)
    return ACTIVE


def reconstruct_log_lik(pulls: int, zeros: int, config: SafetyConfig) -> float:
    """Log-likelihood ratio implied by the counts alone."""
    return zeros * config.lambda0 - (pulls - zeros) * config.lambda1


def min_zeros_table(config: SafetyConfig, max_pulls: int) -> np.ndarray:
    """Smallest rejecting zero count for each pull count 0..max_pulls.

    Entry t equals ceil of the count threshold, so an integer comparison
    ``zeros >= table[pulls]`` reproduces check_discard_count bit for bit.
    """
    t = np.arange(max_pulls + 1, dtype=np.float64)
    thr = (config.log_threshold + config.lambda1 * t) / (
        config.lambda0 + config.lambda1
    )
    return np.ceil(thr).astype(np.int64)


def kl_divergence(config: SafetyConfig) -> float:
    """KL divergence between the Bernoulli(mu) and Bernoulli(mu+epsilon) laws.

    This is the asymptotic per-pull drift of the log-likelihood ratio for an
    arm sitting exactly at the unsafe boundary, and it is strictly positive
    for every valid design.
    """
    mu, eps = config.mu, config.epsilon
    return mu * math.log(mu / (mu + eps)) + (1.0 - mu) * math.log(
        (1.0 - mu) / (1.0 - mu - eps)
    )


def detection_time_bound(config: SafetyConfig) -> float:
    """Upper bound on the expected pulls needed to discard an unsafe arm:
    1 + log(1/alpha) / KL."""
    return 1.0 + config.log_threshold / kl_divergence(config)


def handicap_bound_relaxed(config: SafetyConfig, num_unsafe: int) -> float:
    """Upper bound on the expected total unsafe pulls with ``num_unsafe``
    unsafe arms under the relaxed inspector."""
    if num_unsafe < 0:
        raise InvalidParameter(f"num_unsafe must be >= 0, got {num_unsafe}")
    return num_unsafe * detection_time_bound(config)


def testing_time_bound_flawless(mu_n: float) -> float:
    """Upper bound 1/(1-mu_n)^2 on the expected pulls before the flawless-mode
    inspector removes an arm of mean mu_n < 1."""
    if not 0.0 <= mu_n < 1.0:
        raise InvalidParameter(
            f"bound requires 0 <= mu_n < 1 (an arm with mean 1 is never "
            f"discarded), got {mu_n}"
        )
    return 1.0 / (1.0 - mu_n) ** 2
