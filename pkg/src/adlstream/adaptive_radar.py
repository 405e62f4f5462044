"""Adaptive dual averaging for one nodewise-lasso column.

The nodewise loss for column j weights each squared residual x'r by the GLM
variance phi''(x'beta).  Since beta is itself being estimated online, the
weight uses the lasso estimate frozen at the start of each nodewise epoch,
so the objective drifts from epoch to epoch but is fixed within one.  The
solver starts once the first lasso epoch has produced an estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, SequencingError
from .glm_family import GlmFamily
from .radar import EPOCH_OUTPUTS, _finish_epoch, prox_step
from .schedule import EpochSchedule


@dataclass
class NodewiseState:
    j: int
    schedule: EpochSchedule
    current_iterate: np.ndarray
    dual_gradient_sum: np.ndarray
    iterate_running_sum: np.ndarray
    epoch_center: np.ndarray
    plugged_beta: np.ndarray | None = None
    epoch_index: int = 0
    step_in_epoch: int = 0
    observations_seen_since_start: int = 0
    strength: float = 1.0
    epoch_output: str = "average"
    last_epoch_output: np.ndarray = field(init=False)

    def __post_init__(self):
        self.last_epoch_output = self.epoch_center

    @property
    def start(self) -> int:
        """Global index after which updates are accepted (n_1)."""
        return self.schedule.start

    def arrays(self) -> list[np.ndarray]:
        out = [
            self.current_iterate,
            self.dual_gradient_sum,
            self.iterate_running_sum,
            self.epoch_center,
            self.last_epoch_output,
        ]
        if self.plugged_beta is not None:
            out.append(self.plugged_beta)
        return out


def nodewise_init(
    p: int,
    j: int,
    schedule_prime: EpochSchedule,
    gamma0: np.ndarray | None = None,
    strength: float = 1.0,
    epoch_output: str = "average",
) -> NodewiseState:
    """Fresh state for column ``j`` (0-based); ``gamma0[j]`` is forced to -1."""
    if not 0 <= j < p:
        raise ConfigError(f"target index {j} outside [0, {p})")
    if epoch_output not in EPOCH_OUTPUTS:
        raise ConfigError(f"epoch_output must be one of {EPOCH_OUTPUTS}")
    gamma0 = np.zeros(p) if gamma0 is None else np.array(gamma0, dtype=float)
    if gamma0.shape != (p,):
        raise ConfigError(f"gamma0 has shape {gamma0.shape}, expected ({p},)")
    gamma0[j] = -1.0
    return NodewiseState(
        j=j,
        schedule=schedule_prime,
        current_iterate=gamma0.copy(),
        dual_gradient_sum=np.zeros(p),
        iterate_running_sum=np.zeros(p),
        epoch_center=gamma0,
        strength=strength,
        epoch_output=epoch_output,
    )


def nodewise_gradient(
    x: np.ndarray,
    r: np.ndarray,
    plugged_beta: np.ndarray,
    j: int,
    lambda_prime: float,
    family: GlmFamily,
) -> np.ndarray:
    """Stochastic subgradient of the weighted nodewise objective in r_{-j}.

    ``x_{-j} (x'r) phi''(x'beta) + lambda' sign(r_{-j})`` with sign(0) = 0.
    Returned as a p-vector whose j-th entry is zero.
    """
    if r[j] != -1.0:
        raise ValueError(f"nodewise vector must have r[{j}] == -1, got {r[j]}")
    weight = family.phi_ddot(float(x @ plugged_beta))
    grad = x * (float(x @ r) * weight)
    if lambda_prime:
        grad += lambda_prime * np.sign(r)
    grad[j] = 0.0
    return grad


def nodewise_observe(
    state: NodewiseState,
    x: np.ndarray,
    latest_lasso_output: np.ndarray,
    i: int,
    family: GlmFamily,
) -> NodewiseState:
    """Process global observation ``i`` (1-based, must exceed n_1).

    ``latest_lasso_output`` is the lasso estimate as of observation i - 1.  It is
    only read at the first step of a nodewise epoch, where it becomes the
    frozen weight vector for the whole epoch.
    """
    expected = state.start + state.observations_seen_since_start + 1
    if i <= state.start:
        raise SequencingError(f"nodewise update at i={i} before activation at {state.start + 1}")
    if i != expected:
        raise SequencingError(f"nodewise update at i={i}, expected i={expected}")
    if state.step_in_epoch == 0:
        state.plugged_beta = latest_lasso_output
    j = state.j
    weight = family.phi_ddot(float(x @ state.plugged_beta))
    scale = float(x @ state.current_iterate) * weight
    if not math.isfinite(scale):
        raise DataError(f"non-finite nodewise gradient at observation {i}")
    # The penalty lives in the prox step, so only the smooth part is accumulated.
    state.dual_gradient_sum += scale * x
    state.dual_gradient_sum[j] = 0.0
    state.step_in_epoch += 1
    state.observations_seen_since_start += 1
    length, lam, radius = state.schedule.params(state.epoch_index)
    state.current_iterate = prox_step(
        state.dual_gradient_sum,
        state.epoch_center,
        radius,
        lam,
        state.step_in_epoch,
        state.strength,
        pin=j,
    )
    state.iterate_running_sum += state.current_iterate
    if state.step_in_epoch >= length:
        _finish_epoch(state)
        state.last_epoch_output[j] = -1.0
    return state


def nodewise_current_estimate(state: NodewiseState) -> np.ndarray:
    """Hold-rule estimate: the last nodewise epoch output, with entry j equal to -1."""
    return state.last_epoch_output
