"""Hyper-parameters for the streaming engine and the flat key=value config format.

Two presets are provided.  ``Hyperparameters()`` is tuned for inference on
standardized-ish designs with a handful of active coordinates: a short first
epoch, a light lasso penalty with a weak proximal anchor, and a strongly
penalized nodewise column.  ``estimation_hyperparameters(p)`` follows the
classical RADAR recipe (first epoch ~ 4 log p, lambda_1 = 0.5 sqrt(log p / T_1))
and is the better choice when the lasso trajectory itself is the target.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .engine import EngineSettings
from .errors import ConfigError
from .radar import EPOCH_OUTPUTS
from .schedule import EpochSchedule, default_first_length, geometric_schedule


@dataclass(frozen=True)
class Hyperparameters:
    first_length: int = 20
    growth: float = 2.0
    lambda1: float = 0.05
    radius1: float = 12.0
    strength: float = 0.3
    epoch_output: str = "last"
    nodewise_first_length: int | None = None
    nodewise_growth: float | None = None
    nodewise_lambda1: float = 0.25
    nodewise_radius1: float = 4.0
    nodewise_strength: float = 1.0

    def __post_init__(self):
        if self.epoch_output not in EPOCH_OUTPUTS:
            raise ConfigError(f"epoch_output must be one of {EPOCH_OUTPUTS}, got {self.epoch_output!r}")
        for name in ("strength", "nodewise_strength"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be positive and finite")

    def lasso_schedule(self, horizon: int) -> EpochSchedule:
        return geometric_schedule(self.first_length, self.lambda1, self.radius1, horizon, self.growth)

    def nodewise_schedule(self, horizon: int) -> EpochSchedule:
        start = self.first_length
        t1 = self.nodewise_first_length or self.first_length
        g = self.nodewise_growth or self.growth
        return geometric_schedule(
            t1, self.nodewise_lambda1, self.nodewise_radius1, max(horizon - start, 1), g, start=start
        )

    def engine_settings(self, horizon: int) -> EngineSettings:
        """Resolved schedules covering at least ``horizon`` observations."""
        return EngineSettings(
            self.lasso_schedule(horizon),
            self.nodewise_schedule(horizon),
            self.strength,
            self.nodewise_strength,
            self.epoch_output,
        )

    def replace(self, **changes) -> "Hyperparameters":
        return dataclasses.replace(self, **changes)


def estimation_hyperparameters(p: int, c_T: float = 4.0, radius1: float = 20.0) -> Hyperparameters:
    t1 = default_first_length(p, c_T)
    return Hyperparameters(
        first_length=t1,
        lambda1=0.5 * math.sqrt(max(math.log(p), 1.0) / t1),
        radius1=radius1,
        strength=1.0,
        epoch_output="average",
    )


HYPER_KEYS = {f.name: f for f in dataclasses.fields(Hyperparameters)}


def _coerce(text: str, kind):
    kind = str(kind)
    if text.lower() in ("none", ""):
        if "None" in kind:
            return None
        raise ConfigError(f"value required, got {text!r}")
    if "int" in kind:
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"expected an integer, got {text!r}") from None
    if "float" in kind:
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"expected a number, got {text!r}") from None
    return text


def hyperparameters_from_mapping(values: dict, base: Hyperparameters | None = None) -> Hyperparameters:
    """Apply string-valued overrides for any known hyper-parameter key."""
    base = base or Hyperparameters()
    changes = {}
    for key, text in values.items():
        if key not in HYPER_KEYS:
            continue
        changes[key] = _coerce(str(text), HYPER_KEYS[key].type)
    return base.replace(**changes)


def read_kv_config(path) -> dict[str, str]:
    """Parse a flat ``key = value`` file.  ``#`` starts a comment; later keys win."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            out[key.replace("-", "_")] = value
    return out


def dump_kv(values: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in values.items())
