"""Synthetic streams and replication studies.

Design rows are Gaussian with AR(1) covariance sigma2 * rho^|i-j|, drawn in
O(p) per row by running the recursion x_k = rho x_{k-1} + e_k through
``scipy.signal.lfilter``.  The truth has s0/2 coefficients at +1 and s0/2 at
-1 on a random support.  Every replication owns an independent Philox
substream, split further into truth, design and response streams, so results
do not depend on the order in which replications are run.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .config import Hyperparameters
from .engine import AdlEngine, count_state_scalars
from .errors import ConfigError
from .glm_family import FAMILY_KINDS, GlmFamily, get_family

CATEGORIES = (0, 1, -1)


@dataclass(frozen=True)
class SimConfig:
    n: int = 200
    p: int = 500
    s0: int = 6
    rho: float = 0.5
    sigma2: float = 1.0
    family_kind: str = "logistic"
    replications: int = 500
    seed: int = 0
    alpha: float = 0.05
    checkpoints: tuple = (80, 140, 200)
    per_category: int = 3
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    plugin: bool = False

    def __post_init__(self):
        object.__setattr__(self, "checkpoints", tuple(sorted({int(c) for c in self.checkpoints})))
        self.validate()

    def validate(self):
        if self.n < 1 or self.p < 1:
            raise ConfigError("n and p must be positive")
        if self.s0 < 0 or self.s0 % 2:
            raise ConfigError(f"s0 must be a non-negative even number, got {self.s0}")
        if self.s0 > self.p:
            raise ConfigError(f"s0={self.s0} exceeds p={self.p}")
        if not -1.0 < self.rho < 1.0:
            raise ConfigError(f"rho must lie in (-1, 1), got {self.rho}")
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise ConfigError(f"sigma2 must be positive, got {self.sigma2}")
        if self.family_kind not in FAMILY_KINDS:
            raise ConfigError(f"unknown family {self.family_kind!r}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.checkpoints or self.checkpoints[0] < 1 or self.checkpoints[-1] > self.n:
            raise ConfigError(f"checkpoints must lie in [1, n={self.n}], got {self.checkpoints}")
        if self.per_category < 1:
            raise ConfigError("per_category must be >= 1")


def _ar1_innovations(z: np.ndarray, rho: float, sigma2: float) -> np.ndarray:
    e = z * (math.sqrt(sigma2) * math.sqrt(1.0 - rho * rho))
    e[..., 0] = z[..., 0] * math.sqrt(sigma2)
    return e


def gen_ar1_row(p: int, rho: float, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """One draw from N(0, sigma2 * rho^|i-j|) in O(p)."""
    e = _ar1_innovations(rng.standard_normal(p), rho, sigma2)
    return lfilter([1.0], [1.0, -rho], e)


def gen_ar1_rows(n: int, p: int, rho: float, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` rows at once; identical to ``n`` successive :func:`gen_ar1_row` calls."""
    e = _ar1_innovations(rng.standard_normal((n, p)), rho, sigma2)
    return lfilter([1.0], [1.0, -rho], e, axis=1)


def make_beta_star(p: int, s0: int, rng: np.random.Generator) -> np.ndarray:
    if s0 % 2:
        raise ConfigError(f"s0 must be even, got {s0}")
    if not 0 <= s0 <= p:
        raise ConfigError(f"need 0 <= s0 <= p, got s0={s0}, p={p}")
    beta = np.zeros(p)
    support = rng.choice(p, s0, replace=False)
    beta[support[: s0 // 2]] = 1.0
    beta[support[s0 // 2 :]] = -1.0
    return beta


def gen_response(x: np.ndarray, beta_star: np.ndarray, family, rng: np.random.Generator) -> float:
    return get_family(family).sample_response(float(x @ beta_star), rng)


def pick_tracked(beta_star: np.ndarray, per_category: int, rng: np.random.Generator) -> dict:
    """Up to ``per_category`` indices per category; empty categories map to []."""
    out = {}
    for c in CATEGORIES:
        pool = np.flatnonzero(beta_star == c)
        k = min(per_category, pool.size)
        out[c] = sorted(int(v) for v in rng.choice(pool, k, replace=False)) if k else []
    return out


@dataclass
class ReplicationResult:
    """Per-index, per-checkpoint outcomes of one replication.

    ``records`` rows carry: category, j, m, point, stderr, covered, ci_length,
    abs_bias and, with the ablation enabled, plugin_point and plugin_covered.
    A missing estimate (a4 = 0) appears as a row with ``point`` None.
    """

    replication: int
    tracked: dict
    records: list
    wall_time: float
    state_scalars: int = 0


def run_replication(config: SimConfig, replication: int, seed_seq: np.random.SeedSequence, trace=None):
    truth_ss, design_ss, resp_ss = seed_seq.spawn(3)
    truth_rng = np.random.Generator(np.random.Philox(truth_ss))
    design_rng = np.random.Generator(np.random.Philox(design_ss))
    resp_rng = np.random.Generator(np.random.Philox(resp_ss))
    family: GlmFamily = get_family(config.family_kind)

    beta_star = make_beta_star(config.p, config.s0, truth_rng)
    tracked = pick_tracked(beta_star, config.per_category, truth_rng)
    targets = [j for c in CATEGORIES for j in tracked[c]]
    category_of = {j: c for c in CATEGORIES for j in tracked[c]}
    if not targets:
        raise ConfigError("no coordinates to track")

    if config.plugin:
        from .oracle import plugin_point_from_stats

    t0 = time.perf_counter()
    engine = AdlEngine(config.p, family, targets, config.hyper.engine_settings(config.n))
    checkpoints = set(config.checkpoints)
    records = []
    for m in range(1, config.n + 1):
        x = gen_ar1_row(config.p, config.rho, config.sigma2, design_rng)
        y = family.sample_response(float(x @ beta_star), resp_rng)
        engine.observe(x, y)
        at_checkpoint = m in checkpoints
        if not at_checkpoint and trace is None:
            continue
        for k, j in enumerate(targets):
            est = engine.estimate(k, config.alpha)
            truth = float(beta_star[j])
            if trace is not None and est is not None:
                trace.write(
                    json.dumps(
                        {"replication": replication, "m": m, "j": j, "category": category_of[j],
                         "beta_star": truth, "point": est.point, "stderr": est.stderr,
                         "ci_low": est.ci_low, "ci_high": est.ci_high}
                    )
                    + "\n"
                )
            if not at_checkpoint:
                continue
            row = {"category": category_of[j], "j": j, "m": m}
            if est is None:
                row.update(point=None, stderr=None, covered=None, ci_length=None, abs_bias=None)
            else:
                row.update(
                    point=est.point,
                    stderr=est.stderr,
                    covered=est.covers(truth),
                    ci_length=est.length,
                    abs_bias=abs(est.point - truth),
                )
                if config.plugin:
                    pp = plugin_point_from_stats(engine.stats[k], engine.beta, engine.gamma(k))
                    half = 0.5 * est.length
                    row.update(plugin_point=pp, plugin_covered=abs(pp - truth) <= half)
            records.append(row)
    wall = time.perf_counter() - t0
    scalars = count_state_scalars(engine.state_arrays())
    return ReplicationResult(replication, tracked, records, wall, scalars)


@dataclass
class StudyTable:
    """Aggregated study output: one row per (category, checkpoint)."""

    config: SimConfig
    rows: list
    standardized: dict
    plugin_standardized: dict
    failures: int
    mean_wall_time: float
    max_state_scalars: int = 0

    COLUMNS = ("category", "checkpoint", "estimates", "failures", "mean_abs_bias",
               "coverage", "mean_ci_length", "z_mean", "z_sd")
    PLUGIN_COLUMNS = ("plugin_coverage", "plugin_z_mean", "plugin_z_sd")

    def row(self, category: int, checkpoint: int) -> dict:
        for r in self.rows:
            if r["category"] == category and r["checkpoint"] == checkpoint:
                return r
        raise KeyError((category, checkpoint))

    def to_csv(self, include_timing: bool = False) -> str:
        cols = list(self.COLUMNS)
        if self.config.plugin:
            cols += self.PLUGIN_COLUMNS
        if include_timing:
            cols.append("mean_wall_time")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            vals = []
            for c in cols:
                v = self.mean_wall_time if c == "mean_wall_time" else r.get(c)
                if v is None:
                    vals.append("unavailable")
                elif isinstance(v, float):
                    vals.append(repr(v))
                else:
                    vals.append(str(v))
            w.writerow(vals)
        return buf.getvalue()


def _mean(v):
    return float(np.mean(v)) if len(v) else None


def _sd(v):
    return float(np.std(v)) if len(v) else None


def aggregate(config: SimConfig, results: list) -> StudyTable:
    results = sorted(results, key=lambda r: r.replication)
    rows, std, pstd, failures = [], {}, {}, 0
    for c in CATEGORIES:
        for m in config.checkpoints:
            recs = [r for res in results for r in res.records if r["category"] == c and r["m"] == m]
            ok = [r for r in recs if r["point"] is not None]
            fails = len(recs) - len(ok)
            failures += fails
            zs = [(r["point"] - c) / r["stderr"] for r in ok if r["stderr"] > 0]
            std[(c, m)] = np.array(zs)
            row = {
                "category": c,
                "checkpoint": m,
                "estimates": len(ok),
                "failures": fails,
                "mean_abs_bias": _mean([r["abs_bias"] for r in ok]),
                "coverage": _mean([float(r["covered"]) for r in ok]),
                "mean_ci_length": _mean([r["ci_length"] for r in ok]),
                "z_mean": _mean(zs),
                "z_sd": _sd(zs),
            }
            if config.plugin:
                pz = [(r["plugin_point"] - c) / r["stderr"] for r in ok if r["stderr"] > 0]
                pstd[(c, m)] = np.array(pz)
                row.update(
                    plugin_coverage=_mean([float(r["plugin_covered"]) for r in ok]),
                    plugin_z_mean=_mean(pz),
                    plugin_z_sd=_sd(pz),
                )
            rows.append(row)
    wall = float(np.mean([r.wall_time for r in results]))
    scalars = max(r.state_scalars for r in results)
    return StudyTable(config, rows, std, pstd, failures, wall, scalars)


def run_study(config: SimConfig, trace=None, trace_replications: int = 1, progress=None) -> StudyTable:
    """Run ``config.replications`` independent replications and aggregate them.

    ``trace``, if given, is a text stream receiving per-step JSON lines for the
    first ``trace_replications`` replications.
    """
    config.validate()
    children = np.random.SeedSequence(config.seed).spawn(config.replications)
    results = []
    for r, ss in enumerate(children):
        tr = trace if (trace is not None and r < trace_replications) else None
        results.append(run_replication(config, r, ss, tr))
        if progress is not None:
            progress(r + 1, config.replications)
    return aggregate(config, results)
