"""Epoch schedules for the multi-epoch dual-averaging solvers.

A schedule is a finite list of epochs, each with a length, a penalty level and
a trust-region radius.  Streams that outlast the list keep repeating the final
epoch, so the stream length does not have to be known in advance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class EpochSchedule:
    """Epoch lengths, penalties and radii; ``start`` offsets every boundary.

    The lasso schedule starts at 0.  The nodewise schedule starts after the
    first lasso epoch, so its boundaries are ``start + T'_1 + ... + T'_k``.
    """

    epoch_lengths: tuple
    lambdas: tuple
    radii: tuple
    start: int = 0

    def __post_init__(self):
        object.__setattr__(self, "epoch_lengths", tuple(int(t) for t in self.epoch_lengths))
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        object.__setattr__(self, "radii", tuple(float(v) for v in self.radii))
        self.validate()

    def validate(self):
        K = len(self.epoch_lengths)
        if K == 0:
            raise ConfigError("schedule needs at least one epoch")
        if len(self.lambdas) != K or len(self.radii) != K:
            raise ConfigError(
                f"schedule lists differ in length: {K} lengths, "
                f"{len(self.lambdas)} lambdas, {len(self.radii)} radii"
            )
        if any(t <= 0 for t in self.epoch_lengths):
            raise ConfigError("epoch lengths must be positive")
        if any(not (lam > 0 and math.isfinite(lam)) for lam in self.lambdas):
            raise ConfigError("lambdas must be positive and finite")
        if any(not (r > 0 and math.isfinite(r)) for r in self.radii):
            raise ConfigError("radii must be positive and finite")
        if any(b >= a for a, b in zip(self.radii, self.radii[1:])):
            raise ConfigError("radii must be strictly decreasing")
        if any(b > a for a, b in zip(self.lambdas, self.lambdas[1:])):
            raise ConfigError("lambdas must be non-increasing")
        if self.start < 0:
            raise ConfigError("schedule start must be non-negative")

    @property
    def num_epochs(self) -> int:
        return len(self.epoch_lengths)

    def params(self, k: int) -> tuple[int, float, float]:
        """(length, lambda, radius) of 0-based epoch ``k``; past the end, the last epoch's."""
        k = min(k, self.num_epochs - 1)
        return self.epoch_lengths[k], self.lambdas[k], self.radii[k]

    def boundaries(self) -> list[int]:
        """Cumulative boundaries of the listed epochs, including ``start``."""
        out, n = [], self.start
        for t in self.epoch_lengths:
            n += t
            out.append(n)
        return out

    def boundary(self, k: int) -> int:
        """End of 0-based epoch ``k``, extending with the final length if needed."""
        b = self.boundaries()
        if k < len(b):
            return b[k]
        return b[-1] + (k - len(b) + 1) * self.epoch_lengths[-1]

    def boundary_at_or_after(self, n: int) -> int:
        b = self.boundaries()
        for v in b:
            if v >= n:
                return v
        last, t = b[-1], self.epoch_lengths[-1]
        return last + math.ceil((n - last) / t) * t

    def is_boundary(self, n: int) -> bool:
        return n > self.start and self.boundary_at_or_after(n) == n

    def shifted(self, start: int) -> "EpochSchedule":
        return EpochSchedule(self.epoch_lengths, self.lambdas, self.radii, start)

    def to_dict(self) -> dict:
        return {
            "epoch_lengths": list(self.epoch_lengths),
            "lambdas": list(self.lambdas),
            "radii": list(self.radii),
            "start": self.start,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EpochSchedule":
        return cls(d["epoch_lengths"], d["lambdas"], d["radii"], int(d.get("start", 0)))


def geometric_schedule(
    first_length: int,
    lambda1: float,
    radius1: float,
    horizon: int,
    growth: float = 2.0,
    start: int = 0,
    max_epochs: int = 64,
) -> EpochSchedule:
    """Epochs T_k = T_1 g^(k-1), lambda_k = lambda_1 g^(-(k-1)/2), R_k = R_1 2^(-(k-1)/2).

    Enough epochs are listed to reach ``start + horizon``, up to ``max_epochs``;
    the stream then keeps repeating the last one.  With ``growth == 1`` the
    lengths and penalties are constant while the radius still shrinks.
    """
    if first_length < 1:
        raise ConfigError("first epoch length must be >= 1")
    if growth < 1:
        raise ConfigError("growth factor must be >= 1")
    if horizon < 1:
        raise ConfigError("horizon must be >= 1")
    lengths, lambdas, radii = [], [], []
    total, k = 0, 0
    while (total < horizon and k < max_epochs) or k == 0:
        t = max(1, int(round(first_length * growth**k)))
        lengths.append(t)
        lambdas.append(lambda1 * growth ** (-k / 2))
        radii.append(radius1 * 2 ** (-k / 2))
        total += t
        k += 1
    return EpochSchedule(lengths, lambdas, radii, start)


def default_first_length(p: int, c_T: float = 4.0) -> int:
    return max(8, math.ceil(c_T * math.log(p)))


def default_lasso_schedule(
    p: int,
    horizon: int,
    *,
    c_T: float = 4.0,
    first_length: int | None = None,
    growth: float = 2.0,
    lambda1: float | None = None,
    lambda_scale: float = 0.5,
    radius1: float = 20.0,
) -> EpochSchedule:
    """Lasso schedule with lambda_1 = lambda_scale * sqrt(log p / T_1) unless given."""
    if p < 1:
        raise ConfigError("dimension must be >= 1")
    t1 = first_length if first_length is not None else default_first_length(p, c_T)
    if lambda1 is None:
        lambda1 = lambda_scale * math.sqrt(max(math.log(p), 1.0) / t1)
    return geometric_schedule(t1, lambda1, radius1, horizon, growth)


def default_nodewise_schedule(
    p: int,
    horizon: int,
    start: int,
    *,
    c_T: float = 4.0,
    first_length: int | None = None,
    growth: float = 2.0,
    lambda1: float | None = None,
    lambda_scale: float = 0.5,
    radius1: float = 20.0,
) -> EpochSchedule:
    """Nodewise (primed) schedule starting at ``start`` = n_1."""
    sched = default_lasso_schedule(
        p,
        max(horizon - start, 1),
        c_T=c_T,
        first_length=first_length,
        growth=growth,
        lambda1=lambda1,
        lambda_scale=lambda_scale,
        radius1=radius1,
    )
    return sched.shifted(start)


def debias_start(lasso: EpochSchedule, nodewise: EpochSchedule) -> int:
    """n_l: the first lasso boundary at or after the first nodewise boundary."""
    return lasso.boundary_at_or_after(nodewise.boundary(0))
