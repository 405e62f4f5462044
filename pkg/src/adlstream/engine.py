"""The full one-pass pipeline: online lasso, nodewise columns, debiasing.

Per observation m the engine
  1. updates the lasso solver and reads the hold-rule estimate beta^(m);
  2. once m > n_1, updates every tracked nodewise column, whose epoch weights
     come from the lasso estimate as of m - 1;
  3. once m > n_l, folds (x_m, y_m, beta^(m), gamma^(m)) into each column's
     summary statistics.
The observation is not retained.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .debias import AdlEstimate, SummaryStats, adl_estimate, stats_init, stats_update
from .errors import ConfigError, DegenerateInformationError
from .glm_family import GlmFamily, get_family
from .adaptive_radar import NodewiseState, nodewise_current_estimate, nodewise_init, nodewise_observe
from .radar import LassoState, radar_current_estimate, radar_init, radar_observe
from .schedule import EpochSchedule, debias_start


@dataclass
class EngineSettings:
    lasso_schedule: EpochSchedule
    nodewise_schedule: EpochSchedule
    strength: float = 1.0
    nodewise_strength: float = 1.0
    epoch_output: str = "average"


class AdlEngine:
    """Streaming inference for coordinates ``targets`` of a p-dimensional GLM."""

    def __init__(
        self,
        p: int,
        family: GlmFamily | str,
        targets,
        settings: EngineSettings,
        beta0: np.ndarray | None = None,
        gamma0: np.ndarray | None = None,
    ):
        self.p = int(p)
        self.family = get_family(family)
        self.targets = [int(j) for j in targets]
        if not self.targets:
            raise ConfigError("at least one target index is required")
        if len(set(self.targets)) != len(self.targets):
            raise ConfigError("duplicate target indices")
        for j in self.targets:
            if not 0 <= j < self.p:
                raise ConfigError(f"target index {j} outside [0, {self.p})")
        self.settings = settings
        lasso, node = settings.lasso_schedule, settings.nodewise_schedule
        self.n1 = lasso.boundary(0)
        if node.start != self.n1:
            raise ConfigError(
                f"nodewise schedule must start at the first lasso boundary n_1={self.n1}, "
                f"got start={node.start}"
            )
        self.n_l = debias_start(lasso, node)
        self.m = 0
        self.lasso: LassoState = radar_init(
            self.p, lasso, beta0, settings.strength, settings.epoch_output
        )
        self.nodewise: list[NodewiseState] = [
            nodewise_init(self.p, j, node, gamma0, settings.nodewise_strength, settings.epoch_output)
            for j in self.targets
        ]
        self.stats: list[SummaryStats] = [stats_init(self.p, j, self.n_l) for j in self.targets]

    def observe(self, x: np.ndarray, y: float) -> None:
        self.m += 1
        m = self.m
        beta_prev = radar_current_estimate(self.lasso)
        radar_observe(self.lasso, x, y, self.family)
        if m <= self.n1:
            return
        beta_m = radar_current_estimate(self.lasso)
        for node in self.nodewise:
            nodewise_observe(node, x, beta_prev, m, self.family)
        if m <= self.n_l:
            return
        for node, st in zip(self.nodewise, self.stats):
            stats_update(st, x, y, beta_m, nodewise_current_estimate(node), self.family, m)

    @property
    def beta(self) -> np.ndarray:
        return radar_current_estimate(self.lasso)

    def gamma(self, k: int) -> np.ndarray:
        return nodewise_current_estimate(self.nodewise[k])

    def estimate(self, k: int, alpha: float = 0.05) -> AdlEstimate | None:
        """Estimate for the k-th target, or None while it is not identifiable."""
        if self.m <= self.n_l:
            return None
        try:
            return adl_estimate(self.stats[k], self.beta, self.gamma(k), alpha)
        except DegenerateInformationError:
            return None

    def estimates(self, alpha: float = 0.05) -> list[AdlEstimate | None]:
        return [self.estimate(k, alpha) for k in range(len(self.targets))]

    def state_arrays(self) -> list[np.ndarray]:
        arrays = list(self.lasso.arrays())
        for node, st in zip(self.nodewise, self.stats):
            arrays.extend(node.arrays())
            arrays.extend(st.arrays())
        return arrays


def count_state_scalars(arrays) -> int:
    """Scalars held by distinct buffers; aliased arrays are counted once."""
    seen, total = set(), 0
    for a in arrays:
        base = a if a.base is None else a.base
        if id(base) in seen:
            continue
        seen.add(id(base))
        total += base.size
    return total
