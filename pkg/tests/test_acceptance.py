"""Acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (shown in the pytest terminal summary) and
then asserts.  Running this file directly prints the same lines.
"""
import math
import resource
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import stats as sps

from adlstream.cli import main
from adlstream.config import Hyperparameters
from adlstream.engine import AdlEngine, count_state_scalars
from adlstream.oracle import batch_lasso, batch_summary_stats, kkt_violation, record_transcript
from adlstream.simulate import CATEGORIES, SimConfig, gen_ar1_rows, run_study
from helpers import offline_agreement, random_glm, report

REPS = 500
TOL = 0.03
FALLBACK = (0.92, 0.98)
TARGET_UNIT = {0: 0.960, 1: 0.940, -1: 0.944}
TARGET_SMALL = {0: 0.960, 1: 0.958, -1: 0.965}

_cache = {}


def study(sigma2):
    if sigma2 not in _cache:
        t0 = time.perf_counter()
        table = run_study(SimConfig(sigma2=sigma2, replications=REPS, seed=20240, plugin=True))
        _cache[sigma2] = (table, time.perf_counter() - t0)
    return _cache[sigma2]


def _coverage_check(criterion, sigma2, targets, plugin_always):
    table, elapsed = study(sigma2)
    cov = {c: table.row(c, 200)["coverage"] for c in CATEGORIES}
    plug = {c: table.row(c, 200)["plugin_coverage"] for c in CATEGORIES}
    point = all(abs(cov[c] - targets[c]) <= TOL for c in CATEGORIES)
    fallback = all(FALLBACK[0] <= cov[c] <= FALLBACK[1] for c in CATEGORIES)
    plugin_fails = all(not FALLBACK[0] <= plug[c] <= FALLBACK[1] for c in (1, -1))
    # the plug-in must fail the band whenever the band is what certifies the result
    need_plugin = plugin_always or not point
    passed = (point or fallback) and (plugin_fails or not need_plugin)
    bar = "within +-0.03 of reference" if point else ("fallback band" if fallback else "neither bar")
    detail = (
        f"sigma2={sigma2} coverage 0/+1/-1 = {cov[0]:.3f}/{cov[1]:.3f}/{cov[-1]:.3f} "
        f"(reference {targets[0]}/{targets[1]}/{targets[-1]}; {bar}); "
        f"plug-in +1/-1 = {plug[1]:.3f}/{plug[-1]:.3f} (must leave {FALLBACK}: {'required' if need_plugin else 'informational'}, leaves: {plugin_fails}); "
        f"failures={table.failures}; {elapsed / REPS:.3f}s/replication"
    )
    report(criterion, passed, detail)
    assert passed, detail


def test_criterion_1_coverage_unit_variance():
    _coverage_check(1, 1.0, TARGET_UNIT, plugin_always=True)


def test_criterion_2_coverage_small_variance():
    _coverage_check(2, 0.1, TARGET_SMALL, plugin_always=False)


def test_criterion_3_interval_length_shrinks():
    ok, parts = True, []
    for sigma2 in (1.0, 0.1):
        table, _ = study(sigma2)
        for c in CATEGORIES:
            lengths = [table.row(c, m)["mean_ci_length"] for m in (80, 140, 200)]
            ok &= lengths[0] > lengths[1] > lengths[2]
            parts.append(f"s2={sigma2},cat={c:+d}: " + "->".join(f"{v:.3f}" for v in lengths))
    report(3, ok, "; ".join(parts))
    assert ok


def test_criterion_4_standardized_errors():
    table, _ = study(1.0)
    z = np.concatenate([table.standardized[(c, 200)] for c in CATEGORIES])
    sd, mean = float(z.std()), float(z.mean())
    ks = sps.kstest(z, "norm")
    per = ", ".join(
        f"{c:+d}: mean {table.standardized[(c, 200)].mean():+.3f} sd {table.standardized[(c, 200)].std():.3f}"
        for c in CATEGORIES
    )
    ok = 0.85 <= sd <= 1.15 and abs(mean) <= 0.1
    report(4, ok, f"pooled z over {z.size} estimates: mean {mean:+.3f}, sd {sd:.3f}, "
                  f"KS p={ks.pvalue:.3f}; per category [{per}]")
    assert ok


def test_criterion_5_memory_and_runtime(tmp_path):
    p, n, s0 = 20000, 1000, 20
    cmd = [sys.executable, "-m", "adlstream.cli", "simulate", "--p", str(p), "--n", str(n), "--s0", str(s0),
           "--replications", "1", "--checkpoints", "200,500,1000", "--report-memory",
           "-o", str(tmp_path / "fig.csv")]
    t0 = time.perf_counter()
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=900)
    elapsed = time.perf_counter() - t0
    rss_mb = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss / 1024
    assert proc.returncode == 0, proc.stderr
    fields = dict(kv.split("=") for kv in proc.stderr.split() if "=" in kv)
    total_per_p = float(fields["per_p"])

    h = Hyperparameters()
    eng = AdlEngine(p, "logistic", [0], h.engine_settings(n))
    rng = np.random.default_rng(0)
    beta = np.zeros(p)
    beta[:s0] = np.repeat([1.0, -1.0], s0 // 2)
    peak_single = 0
    for x in gen_ar1_rows(n, p, 0.5, 1.0, rng):
        eng.observe(x, float(rng.random() < 1 / (1 + math.exp(-(x @ beta)))))
        peak_single = max(peak_single, count_state_scalars(eng.state_arrays()))
    ok = peak_single <= 20 * p and rss_mb < 2048 and elapsed <= 600
    report(5, ok, f"p={p}, n={n}, s0={s0}: one lasso + one tracked coordinate peaks at "
                  f"{peak_single / p:.1f}p scalars (<= 20p); all 9 tracked coordinates hold "
                  f"{total_per_p:.1f}p; peak RSS {rss_mb:.0f} MB; wall {elapsed:.1f}s")
    assert ok


def test_criterion_6_oracle_equivalence():
    n, p = 200, 50
    rng = np.random.default_rng(6)
    X = gen_ar1_rows(n, p, 0.5, 1.0, rng)
    beta = np.zeros(p)
    beta[[1, 8, 30]] = [1.0, -1.0, 1.0]
    y = (rng.random(n) < 1 / (1 + np.exp(-(X @ beta)))).astype(float)
    eng = AdlEngine(p, "logistic", [8], Hyperparameters().engine_settings(n))
    tr = record_transcript(eng, 0, X, y)
    ref = batch_summary_stats(tr, 8, eng.n_l, "logistic")
    s = eng.stats[0]

    def rel(a, b):
        a, b = np.atleast_1d(a), np.atleast_1d(b)
        return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))

    errs = {k: rel(getattr(s, k), getattr(ref, k)) for k in ("a1", "a2", "a3", "a4", "a5")}
    bitwise = s.a4 == s.a2[8]
    ok = all(v <= 1e-10 for v in errs.values()) and bitwise
    report(6, ok, "max relative errors " + ", ".join(f"{k}={v:.1e}" for k, v in errs.items())
           + f"; a4 bitwise equal to a2[j]: {bitwise}")
    assert ok


def test_criterion_7_offline_agreement():
    diffs = np.array([offline_agreement(seed) for seed in range(20)])
    frac = float(np.mean(diffs <= 0.1))
    ok = frac >= 0.9
    report(7, ok, f"{frac:.0%} of 20 seeds within 0.1 (median gap {np.median(diffs):.3f}, max {diffs.max():.3f})")
    assert ok


def test_criterion_8_kkt():
    worst = 0.0
    for seed in range(10):
        for family in ("gaussian", "logistic"):
            X, y, _ = random_glm(100 + seed, family, n=80 + 10 * seed, p=5 + seed)
            lam = 0.02 + 0.01 * seed
            b = batch_lasso(X, y, lam, family)
            worst = max(worst, kkt_violation(X, y, b, lam, family))
    ok = worst <= 1e-6
    report(8, ok, f"largest subgradient violation over 20 fits: {worst:.1e}")
    assert ok


def test_criterion_9_determinism(tmp_path):
    from test_cli import _sim_csv

    data = tmp_path / "d.csv"
    _sim_csv(data, 9)
    fits = []
    for k in range(2):
        out = tmp_path / f"fit{k}.jsonl"
        assert main(["fit", str(data), "--j", "1", "--j", "7", "--seed", "3", "-o", str(out)]) == 0
        fits.append(out.read_bytes())
    sims = []
    for k in range(2):
        out = tmp_path / f"sim{k}.csv"
        assert main(["simulate", "--replications", "5", "--seed", "3", "-o", str(out)]) == 0
        sims.append(out.read_bytes())
    ok = fits[0] == fits[1] and sims[0] == sims[1] and len(fits[0]) > 0 and len(sims[0]) > 0
    report(9, ok, f"fit outputs identical: {fits[0] == fits[1]} ({len(fits[0])} bytes); "
                  f"simulate outputs identical: {sims[0] == sims[1]} ({len(sims[0])} bytes)")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
