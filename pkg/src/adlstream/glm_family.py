"""Exponential-family link triples for canonical GLMs.

The log-partition ``phi`` and its first two derivatives are all the
streaming estimators need: ``phi_dot`` gives the mean function used in the
score, ``phi_ddot`` the variance weight used in the Hessian.  The dispersion
is fixed to one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

FAMILY_KINDS = ("logistic", "gaussian")


def _check_finite(t: float) -> float:
    t = float(t)
    if not math.isfinite(t):
        raise DomainError(f"link evaluated at non-finite argument {t!r}")
    return t


def _sigmoid(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


@dataclass(frozen=True)
class GlmFamily:
    """Canonical GLM family selected by ``kind`` ("logistic" or "gaussian")."""

    kind: str

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise DomainError(f"unknown family {self.kind!r}; expected one of {FAMILY_KINDS}")

    def phi(self, t: float) -> float:
        t = _check_finite(t)
        if self.kind == "gaussian":
            return 0.5 * t * t
        # log(1 + e^t) without overflow for large t or underflow for very negative t
        if t > 0:
            return t + math.log1p(math.exp(-t))
        return math.log1p(math.exp(t))

    def phi_dot(self, t: float) -> float:
        t = _check_finite(t)
        if self.kind == "gaussian":
            return t
        return _sigmoid(t)

    def phi_ddot(self, t: float) -> float:
        t = _check_finite(t)
        if self.kind == "gaussian":
            return 1.0
        # s(t) * s(-t) avoids the cancellation in s * (1 - s)
        return _sigmoid(t) * _sigmoid(-t)

    # Aliases matching the operation names used elsewhere in the docs.
    link_value = phi
    link_deriv = phi_dot
    link_second_deriv = phi_ddot

    def point_gradient(self, x: np.ndarray, y: float, beta: np.ndarray) -> np.ndarray:
        """Single-observation score ``x * (phi_dot(x'beta) - y)``."""
        x = np.asarray(x, dtype=float)
        beta = np.asarray(beta, dtype=float)
        if x.shape != beta.shape or x.ndim != 1:
            raise ValueError(f"dimension mismatch: x {x.shape} vs beta {beta.shape}")
        return x * (self.phi_dot(x @ beta) - y)

    def sample_response(self, eta: float, rng: np.random.Generator) -> float:
        """Draw y given the linear predictor ``eta``."""
        if self.kind == "gaussian":
            return eta + rng.standard_normal()
        return float(rng.random() < _sigmoid(eta))


def get_family(kind: str | GlmFamily) -> GlmFamily:
    if isinstance(kind, GlmFamily):
        return kind
    return GlmFamily(kind)


LOGISTIC = GlmFamily("logistic")
GAUSSIAN = GlmFamily("gaussian")
