"""Sequential safety screening for Bernoulli bandit arms.

A one-sided sequential probability ratio test discards arms whose success
rate falls below a prescribed safety threshold, with analytic bounds on how
many unsafe pulls that costs and on the fraction of safe arms kept. The
package bundles the closed-form test mathematics, a seeded simulation engine,
metric accounting, and a Monte Carlo experiment harness with CSV output.
"""

__version__ = "0.1.0"

from .core import (
    ACTIVE,
    ArmState,
    SafetyConfig,
    Verdict,
    check_discard_count,
    check_discard_loglik,
    detection_time_bound,
    handicap_bound_relaxed,
    kl_divergence,
    make_config,
    testing_time_bound_flawless,
    update_log_lik,
)
from .engine import (
    BanditEnv,
    HistoryView,
    InspectorState,
    SurvivingSet,
    UniformPolicy,
    greedy_mean_policy,
    run,
    step_filtered,
    step_flawless,
    step_relaxed,
)
from .errors import (
    ConfigError,
    EmptySurvivingSet,
    IndexOutOfRange,
    InvalidParameter,
    IoError,
    NoSafeArms,
    PolicyViolation,
    SafebanditError,
    SchemaError,
    UpdateAfterDiscard,
)
from .experiments import (
    ExperimentSpec,
    ResultSet,
    emit,
    first_crossing_mc,
    run_experiment,
    sweep,
)
from .metrics import (
    AggregateStats,
    BoundSet,
    RunTrace,
    aggregate,
    bound_overlay,
    handicap,
    safety_ratio,
    testing_time,
)

__all__ = [name for name in dir() if not name.startswith("_")]
