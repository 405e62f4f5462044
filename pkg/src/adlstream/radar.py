"""One-pass multi-epoch regularized dual averaging for the online lasso.

Within epoch k the solver runs regularized dual averaging on the stream with a
quadratic prox term centred at the previous epoch's output and a hard l1 trust
region of radius R_k around that centre.  The epoch output is the average of
the epoch's iterates (or the last iterate, if configured) and becomes the next
centre.  Between epoch boundaries the published estimate is held constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .glm_family import GlmFamily
from .schedule import EpochSchedule

EPOCH_OUTPUTS = ("average", "last")


def _soft(z: np.ndarray, tau: float) -> np.ndarray:
    return np.sign(z) * np.maximum(np.abs(z) - tau, 0.0)


def project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto {u : ||u||_1 <= radius} (sort-based)."""
    a = np.abs(v)
    if a.sum() <= radius:
        return v
    mu = np.sort(a)[::-1]
    cums = np.cumsum(mu)
    ks = np.arange(1, a.size + 1)
    rho = np.nonzero(mu * ks > cums - radius)[0][-1]
    theta = (cums[rho] - radius) / (rho + 1)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def prox_step(
    dual_sum: np.ndarray,
    center: np.ndarray,
    radius: float,
    lam: float,
    step_count: int,
    strength: float = 1.0,
    pin: int | None = None,
) -> np.ndarray:
    """Composite dual-averaging step inside the trust region around ``center``.

    Minimizes <dual_sum/step_count, b> + lam ||b||_1 + (strength/sqrt(step_count)) ||b - center||_2^2
    by soft-thresholding, then projects onto ||b - center||_1 <= radius.  The
    two-stage answer is the exact constrained minimizer when ``center`` is zero
    and a feasible approximation otherwise.  A ``pin`` coordinate is held at
    ``center[pin]``.
    """
    if not radius > 0:
        raise ConfigError(f"trust-region radius must be positive, got {radius}")
    if lam < 0:
        raise ConfigError(f"lambda must be non-negative, got {lam}")
    if step_count < 1:
        raise ConfigError("step_count must be >= 1")
    two_kappa = 2.0 * strength / math.sqrt(step_count)
    beta = _soft(center - dual_sum / (step_count * two_kappa), lam / two_kappa)
    if pin is not None:
        beta[pin] = center[pin]
    diff = beta - center
    if np.abs(diff).sum() <= radius:
        return beta
    return center + project_l1_ball(diff, radius)


@dataclass
class LassoState:
    """Streaming state of the online lasso; a fixed handful of p-vectors.

    ``last_epoch_output`` and ``epoch_center`` refer to the same array: each
    epoch output becomes the next centre.  Outputs are replaced, never
    modified in place, so earlier references stay valid snapshots.
    """

    schedule: EpochSchedule
    current_iterate: np.ndarray
    dual_gradient_sum: np.ndarray
    iterate_running_sum: np.ndarray
    epoch_center: np.ndarray
    epoch_index: int = 0
    step_in_epoch: int = 0
    observations_seen: int = 0
    strength: float = 1.0
    epoch_output: str = "average"
    last_epoch_output: np.ndarray = field(init=False)

    def __post_init__(self):
        self.last_epoch_output = self.epoch_center

    @property
    def p(self) -> int:
        return self.current_iterate.shape[0]

    def arrays(self) -> list[np.ndarray]:
        return [
            self.current_iterate,
            self.dual_gradient_sum,
            self.iterate_running_sum,
            self.epoch_center,
            self.last_epoch_output,
        ]

    def to_dict(self) -> dict:
        return {
            "schedule": self.schedule.to_dict(),
            "current_iterate": self.current_iterate.tolist(),
            "dual_gradient_sum": self.dual_gradient_sum.tolist(),
            "iterate_running_sum": self.iterate_running_sum.tolist(),
            "epoch_center": self.epoch_center.tolist(),
            "epoch_index": self.epoch_index,
            "step_in_epoch": self.step_in_epoch,
            "observations_seen": self.observations_seen,
            "strength": self.strength,
            "epoch_output": self.epoch_output,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LassoState":
        return cls(
            schedule=EpochSchedule.from_dict(d["schedule"]),
            current_iterate=np.asarray(d["current_iterate"], dtype=float),
            dual_gradient_sum=np.asarray(d["dual_gradient_sum"], dtype=float),
            iterate_running_sum=np.asarray(d["iterate_running_sum"], dtype=float),
            epoch_center=np.asarray(d["epoch_center"], dtype=float),
            epoch_index=d["epoch_index"],
            step_in_epoch=d["step_in_epoch"],
            observations_seen=d["observations_seen"],
            strength=d["strength"],
            epoch_output=d["epoch_output"],
        )


def radar_init(
    p: int,
    schedule: EpochSchedule,
    beta0: np.ndarray | None = None,
    strength: float = 1.0,
    epoch_output: str = "average",
) -> LassoState:
    if schedule is None or schedule.num_epochs == 0:
        raise ConfigError("empty schedule")
    if epoch_output not in EPOCH_OUTPUTS:
        raise ConfigError(f"epoch_output must be one of {EPOCH_OUTPUTS}")
    if not strength > 0:
        raise ConfigError("prox strength must be positive")
    beta0 = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float)
    if beta0.shape != (p,):
        raise ConfigError(f"beta0 has shape {beta0.shape}, expected ({p},)")
    return LassoState(
        schedule=schedule,
        current_iterate=beta0.copy(),
        dual_gradient_sum=np.zeros(p),
        iterate_running_sum=np.zeros(p),
        epoch_center=beta0,
        strength=strength,
        epoch_output=epoch_output,
    )


def _finish_epoch(state) -> np.ndarray:
    """Close the current epoch; returns the new output (a fresh array)."""
    if state.epoch_output == "average":
        out = state.iterate_running_sum / state.step_in_epoch
    else:
        out = state.current_iterate.copy()
    state.epoch_center = out
    state.last_epoch_output = out
    state.current_iterate = out.copy()
    state.dual_gradient_sum[:] = 0.0
    state.iterate_running_sum[:] = 0.0
    state.step_in_epoch = 0
    state.epoch_index += 1
    return out


def radar_observe(state: LassoState, x: np.ndarray, y: float, family: GlmFamily) -> LassoState:
    """Fold one observation into the state; closes the epoch at a boundary."""
    eta = float(x @ state.current_iterate)
    resid = family.phi_dot(eta) - y
    if not math.isfinite(resid):
        raise DataError(f"non-finite residual at observation {state.observations_seen + 1}")
    state.dual_gradient_sum += resid * x
    state.step_in_epoch += 1
    state.observations_seen += 1
    length, lam, radius = state.schedule.params(state.epoch_index)
    state.current_iterate = prox_step(
        state.dual_gradient_sum,
        state.epoch_center,
        radius,
        lam,
        state.step_in_epoch,
        state.strength,
    )
    state.iterate_running_sum += state.current_iterate
    if state.step_in_epoch >= length:
        _finish_epoch(state)
    return state


def radar_current_estimate(state: LassoState) -> np.ndarray:
    """Hold-rule estimate: the most recent epoch output (beta0 before the first)."""
    return state.last_epoch_output
