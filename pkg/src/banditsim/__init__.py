"""Contextual-bandit simulation toolkit.

Synthetic logistic-reward environments with controllable concept drift
and reward delay, classic on-policy bandit algorithms with deferred
updates, an inverse-propensity-weighted off-policy learner, and a
config-driven experiment runner that emits seeded, replicated CSV data.
"""

from .config import (
    ExperimentConfig,
    PRESETS,
    load_config,
    output_labels,
    resolve_config,
)
from .delay import DelayConfig, ExponentialDelaySampler
from .drift import CoefficientDrifter, DrifterConfig, blend_fraction
from .env import (
    BanditEnvironment,
    EnvironmentConfig,
    EnvironmentRound,
    expected_rewards,
    sigmoid,
)
from .errors import ConfigError, DegenerateLogError
from .offpolicy import (
    IPWConfig,
    LoggedInteraction,
    ModelArgmaxPolicy,
    MulticlassLinearModel,
    evaluate_ground_truth,
    export_logged_feedback,
    fit_ipw,
    fit_propensity,
)
from .policies import (
    ActionChoice,
    BernoulliTSPolicy,
    EpsilonGreedyPolicy,
    LinTSPolicy,
    LinUCBPolicy,
    UniformRandomPolicy,
    make_policy,
)
from .runner import derive_seed, run_experiment, run_replication
from .sim import (
    PendingUpdate,
    SimulationLog,
    cumulative_regret,
    rolling_mean,
    rolling_mean_reward,
    run,
    simulate,
)

__version__ = "0.1.0"
