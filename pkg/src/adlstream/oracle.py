"""Offline reference computations for checking the streaming estimators.

Nothing in the streaming engine imports this module.  Everything here may
hold the full data matrix: a batch lasso solver, the offline one-step
debiased estimator, literal re-summation of the summary statistics from a
recorded transcript, and the first-order plug-in correction that omits the
Taylor terms.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .debias import SummaryStats
from .errors import DegenerateInformationError
from .glm_family import GlmFamily, get_family


class ConvergenceError(RuntimeError):
    pass


class TranscriptError(ValueError):
    pass


# -- batch lasso ----------------------------------------------------------------------------


def _soft(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def _weighted_cd(X, w, z, lam, beta, tol, max_sweeps):
    """Cyclic coordinate descent on (1/2n) sum w_i (z_i - x_i'b)^2 + lam ||b||_1."""
    n, p = X.shape
    col_sq = (w[:, None] * X * X).sum(axis=0) / n
    resid = z - X @ beta
    for _ in range(max_sweeps):
        max_change = 0.0
        for k in range(p):
            if col_sq[k] == 0.0:
                if beta[k] != 0.0:
                    resid += X[:, k] * beta[k]
                    beta[k] = 0.0
                continue
            old = beta[k]
            rho = float(np.dot(w * X[:, k], resid)) / n + col_sq[k] * old
            new = _soft(rho, lam) / col_sq[k]
            if new != old:
                resid -= X[:, k] * (new - old)
                beta[k] = new
                max_change = max(max_change, abs(new - old))
        if max_change < tol:
            return beta, True
    return beta, False


def lasso_objective(X, y, beta, lam, family) -> float:
    family = get_family(family)
    eta = X @ beta
    if family.kind == "gaussian":
        loss = float(np.mean(0.5 * eta * eta - y * eta))
    else:
        loss = float(np.mean(np.logaddexp(0.0, eta) - y * eta))
    return loss + lam * float(np.abs(beta).sum())


def batch_gradient(X, y, beta, family) -> np.ndarray:
    """Gradient of the average negative log-likelihood, (1/n) sum x_i (phi'(x_i'b) - y_i)."""
    family = get_family(family)
    eta = X @ beta
    mu = eta if family.kind == "gaussian" else 0.5 * (1.0 + np.tanh(0.5 * eta))
    return X.T @ (mu - y) / X.shape[0]


def kkt_violation(X, y, beta, lam, family) -> float:
    """Largest violation of the lasso subgradient conditions at ``beta``."""
    g = batch_gradient(X, y, beta, family)
    active = beta != 0
    v_active = np.abs(g[active] + lam * np.sign(beta[active]))
    v_inactive = np.maximum(np.abs(g[~active]) - lam, 0.0)
    return float(max(v_active.max(initial=0.0), v_inactive.max(initial=0.0)))


def batch_lasso(X, y, lam, family, tol=1e-8, max_iter=500, beta0=None) -> np.ndarray:
    """Minimize (1/n) sum {phi(x_i'b) - y_i x_i'b} + lam ||b||_1.

    Gaussian: cyclic coordinate descent.  Logistic: proximal Newton, where each
    outer step solves the weighted quadratic model by coordinate descent and is
    accepted after a backtracking line search on the true objective.
    Converged when the largest coordinate change falls below ``tol``.
    """
    family = get_family(family)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float)
    if family.kind == "gaussian":
        beta, ok = _weighted_cd(X, np.ones(n), y, lam, beta, tol, max_iter * 20)
        if not ok:
            raise ConvergenceError(f"coordinate descent did not converge in {max_iter * 20} sweeps")
        return beta

    obj = lasso_objective(X, y, beta, lam, family)
    for _ in range(max_iter):
        eta = X @ beta
        mu = 0.5 * (1.0 + np.tanh(0.5 * eta))
        w = np.maximum(mu * (1.0 - mu), 1e-12)
        z = eta + (y - mu) / w
        target, _ = _weighted_cd(X, w, z, lam, beta.copy(), tol * 1e-2, 10000)
        step = target - beta
        t = 1.0
        while True:
            cand = beta + t * step
            cand_obj = lasso_objective(X, y, cand, lam, family)
            if cand_obj <= obj + 1e-15 or t < 1e-10:
                break
            t *= 0.5
        change = float(np.abs(cand - beta).max(initial=0.0))
        beta, obj = cand, min(cand_obj, obj)
        if change < tol:
            return beta
    raise ConvergenceError(f"proximal Newton did not converge in {max_iter} iterations")


def oracle_nodewise(X, beta_tilde, j, lam, family) -> np.ndarray:
    """Offline nodewise vector r with r_j = -1 for the weighted design at ``beta_tilde``.

    Minimizes (1/2n) sum w_i (x_i'r)^2 + lam ||r_{-j}||_1, w_i = phi''(x_i'beta_tilde).
    """
    family = get_family(family)
    X = np.asarray(X, dtype=float)
    w = np.array([family.phi_ddot(float(t)) for t in X @ beta_tilde])
    others = np.delete(np.arange(X.shape[1]), j)
    coef, ok = _weighted_cd(X[:, others], w, X[:, j], lam, np.zeros(others.size), 1e-10, 100000)
    if not ok:
        raise ConvergenceError("nodewise coordinate descent did not converge")
    r = np.zeros(X.shape[1])
    r[others] = coef
    r[j] = -1.0
    return r


# -- offline debiasing ----------------------------------------------------------------------


def offline_debias(X, y, beta_tilde, gamma_tilde, j, family) -> float:
    """beta_j - gamma'grad F_n(beta) / (gamma' [hessian F_n(beta)]_{.j})."""
    family = get_family(family)
    X = np.asarray(X, dtype=float)
    eta = X @ beta_tilde
    grad = batch_gradient(X, y, beta_tilde, family)
    w = np.array([family.phi_ddot(float(t)) for t in eta])
    hess_col = X.T @ (w * X[:, j]) / X.shape[0]
    denom = float(gamma_tilde @ hess_col)
    if denom == 0.0:
        raise DegenerateInformationError("offline debiasing denominator is zero")
    return float(beta_tilde[j]) - float(gamma_tilde @ grad) / denom


# -- transcripts ----------------------------------------------------------------------------


@dataclass
class Transcript:
    """Rows (i, x_i, y_i, beta^(i), gamma^(i)) captured from a streaming run."""

    index: np.ndarray
    X: np.ndarray
    y: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        self.index = np.asarray(self.index, dtype=int)
        n = self.index.size
        for name in ("X", "beta", "gamma"):
            a = getattr(self, name)
            if a.ndim != 2 or a.shape[0] != n:
                raise TranscriptError(f"{name} has shape {a.shape}, expected ({n}, p)")
        if self.y.shape != (n,):
            raise TranscriptError("y length does not match the index column")
        if n > 1 and np.any(np.diff(self.index) <= 0):
            raise TranscriptError("transcript indices must be strictly increasing")

    def __len__(self):
        return self.index.size

    def permuted(self, order) -> "Transcript":
        """Rows reordered; indices are relabelled so they stay increasing."""
        order = np.asarray(order)
        return Transcript(self.index.copy(), self.X[order], self.y[order], self.beta[order], self.gamma[order])

    def write_csv(self, path):
        p = self.X.shape[1]
        header = ["i", "y"] + [f"x{k}" for k in range(p)] + [f"beta{k}" for k in range(p)] + [
            f"gamma{k}" for k in range(p)
        ]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in range(len(self)):
                w.writerow(
                    [int(self.index[r]), repr(float(self.y[r]))]
                    + [repr(float(v)) for v in np.concatenate([self.X[r], self.beta[r], self.gamma[r]])]
                )

    @classmethod
    def read_csv(cls, path) -> "Transcript":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        p = sum(1 for h in header if h.startswith("x"))
        data = np.array([[float(v) for v in r] for r in body]).reshape(len(body), 2 + 3 * p)
        return cls(
            data[:, 0].astype(int), data[:, 2 : 2 + p], data[:, 1], data[:, 2 + p : 2 + 2 * p], data[:, 2 + 2 * p :]
        )


def record_transcript(engine, k, X, y) -> Transcript:
    """Stream (X, y) through ``engine`` and record target ``k``'s accumulation rows."""
    rows = []
    for x, yi in zip(X, y):
        engine.observe(x, float(yi))
        if engine.m > engine.n_l:
            rows.append((engine.m, x.copy(), float(yi), engine.beta.copy(), engine.gamma(k).copy()))
    p = engine.p
    if not rows:
        return Transcript(np.zeros(0, int), np.zeros((0, p)), np.zeros(0), np.zeros((0, p)), np.zeros((0, p)))
    i, Xs, ys, bs, gs = zip(*rows)
    return Transcript(np.array(i), np.array(Xs), np.array(ys), np.array(bs), np.array(gs))


def _terms(transcript: Transcript, j: int, family: GlmFamily):
    eta = np.einsum("ij,ij->i", transcript.X, transcript.beta)
    g = np.einsum("ij,ij->i", transcript.X, transcript.gamma)
    w = np.array([family.phi_ddot(float(t)) for t in eta])
    r = np.array([family.phi_dot(float(t)) for t in eta]) - transcript.y
    return eta, g, w, r


def batch_summary_stats(transcript: Transcript, j: int, n_l: int, family) -> SummaryStats:
    """Literal sums of the five accumulators over the transcript rows, exactly rounded."""
    family = get_family(family)
    if len(transcript):
        expected = np.arange(n_l + 1, n_l + 1 + len(transcript))
        if not np.array_equal(transcript.index, expected):
            raise TranscriptError(f"transcript must cover ({n_l}, m] without gaps")
    p = transcript.X.shape[1]
    eta, g, w, r = _terms(transcript, j, family)
    coef = g * w
    a1 = np.array([math.fsum(transcript.X[:, k] * r) for k in range(p)])
    a2 = np.array([math.fsum(transcript.X[:, k] * coef) for k in range(p)])
    a3 = math.fsum(coef * eta)
    a4 = math.fsum(coef * transcript.X[:, j])
    a5 = math.fsum((g * r) ** 2)
    return SummaryStats(j=j, n_l=n_l, a1=a1, a2=a2, a3=a3, a4=a4, a5=a5, m=n_l + len(transcript))


def plugin_point_from_stats(stats: SummaryStats, beta_m, gamma_m) -> float:
    """First-order plug-in estimate beta_mj - a1'gamma_m / a4 (no Taylor terms)."""
    if stats.a4 == 0.0:
        raise DegenerateInformationError("a4 = 0: plug-in estimate not identifiable")
    return float(beta_m[stats.j]) - float(stats.a1 @ gamma_m) / stats.a4


def plugin_debias_ablation(transcript: Transcript, beta_m, gamma_m, j: int, family) -> float:
    family = get_family(family)
    _, g, w, r = _terms(transcript, j, family)
    a1 = np.array([math.fsum(transcript.X[:, k] * r) for k in range(transcript.X.shape[1])])
    a4 = math.fsum(g * w * transcript.X[:, j])
    if a4 == 0.0:
        raise DegenerateInformationError("a4 = 0: plug-in estimate not identifiable")
    return float(beta_m[j]) - float(a1 @ gamma_m) / a4
