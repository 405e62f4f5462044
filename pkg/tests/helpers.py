"""Shared fixtures for building small streaming runs."""
import math

import numpy as np

from adlstream.config import estimation_hyperparameters
from adlstream.engine import AdlEngine
from adlstream.oracle import batch_lasso, offline_debias, oracle_nodewise
from adlstream.simulate import gen_ar1_rows, make_beta_star


def linear_instance(seed, n=300, p=10, s0=2, rho=0.0):
    rng = np.random.default_rng(seed)
    beta = make_beta_star(p, s0, rng)
    X = gen_ar1_rows(n, p, rho, 1.0, rng)
    y = X @ beta + rng.standard_normal(n)
    return X, y, beta


def offline_agreement(seed, n=300, p=10, rho=0.0):
    """|ADL - offline one-step estimate| for the first active coordinate."""
    X, y, beta = linear_instance(seed, n, p, 2, rho)
    j = int(np.flatnonzero(beta)[0])
    h = estimation_hyperparameters(p).replace(nodewise_radius1=1.0)
    eng = AdlEngine(p, "gaussian", [j], h.engine_settings(n))
    for x, yi in zip(X, y):
        eng.observe(x, float(yi))
    lam = math.sqrt(math.log(p) / n)
    bt = batch_lasso(X, y, lam, "gaussian")
    gt = oracle_nodewise(X, bt, j, lam, "gaussian")
    return abs(eng.estimate(0).point - offline_debias(X, y, bt, gt, j, "gaussian"))


def random_glm(seed, family, n=120, p=8):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[: 2] = [1.0, -0.8]
    eta = X @ beta
    if family == "gaussian":
        y = eta + rng.standard_normal(n)
    else:
        y = (rng.random(n) < 1 / (1 + np.exp(-eta))).astype(float)
    return X, y, beta


ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed
