"""One-pass debiased lasso inference for sparse generalized linear models.

Observations are processed once and discarded.  The state is a fixed number
of p-vectors: an online lasso solver, one nodewise solver per tracked
coordinate and five summary statistics from which a debiased point estimate,
its standard error and a confidence interval can be read at any step.
"""
from .adaptive_radar import (
    NodewiseState,
    nodewise_current_estimate,
    nodewise_gradient,
    nodewise_init,
    nodewise_observe,
)
from .config import Hyperparameters, estimation_hyperparameters
from .debias import (
    AdlEstimate,
    SummaryStats,
    adl_estimate,
    adl_point,
    adl_stderr,
    confidence_interval,
    normal_quantile,
    stats_init,
    stats_update,
)
from .engine import AdlEngine, EngineSettings, count_state_scalars
from .errors import ConfigError, DataError, DegenerateInformationError, DomainError, SequencingError
from .glm_family import GAUSSIAN, LOGISTIC, GlmFamily, get_family
from .radar import (
    LassoState,
    project_l1_ball,
    prox_step,
    radar_current_estimate,
    radar_init,
    radar_observe,
)
from .schedule import EpochSchedule, debias_start, geometric_schedule

__all__ = [name for name in dir() if not name.startswith("_")]
