"""Cox log partial likelihood with L1 and graph-Laplacian penalties.

Ties use the Breslow convention: every subject with ``time >= t`` is at risk
at ``t``, and tied events share one risk set. Risk-set sums come from a
single reverse cumulative pass over the time-sorted rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import SurvivalDataset
from .errors import ContractError
from .graph import Laplacian, quad_form

# below this (log scale, relative to max(eta)) the shifted risk sums underflow
_UNDERFLOW_LOG = -700.0


@dataclass(frozen=True)
class CoxObjectiveParts:
    loglik: float
    l1: float
    graph: float
    total: float


def _check_w(w, ds: SurvivalDataset) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (ds.p,):
        raise ContractError(f"weight vector has shape {w.shape}, expected ({ds.p},)")
    return w


def _check_events(ds: SurvivalDataset) -> None:
    if ds.q == 0:
        raise ContractError("no uncensored observations")


def _log_risk(eta: np.ndarray) -> np.ndarray:
    """``log(sum_{j >= i} exp(eta_j))`` for every row ``i``."""
    return np.logaddexp.accumulate(eta[::-1])[::-1]


def log_partial_likelihood(w, ds: SurvivalDataset) -> float:
    w = _check_w(w, ds)
    _check_events(ds)
    eta = ds.X @ w
    log_risk = _log_risk(eta)
    ev = ds.events
    return float(np.sum(eta[ev] - log_risk[ds.tie_start[ev]]))


def _loglik_gradient(w: np.ndarray, ds: SurvivalDataset) -> np.ndarray:
    X, ev = ds.X, ds.events
    eta = X @ w
    starts, n_at = np.unique(ds.tie_start[ev], return_counts=True)
    shift = eta.max()
    log_risk = _log_risk(eta)
    if log_risk[starts].min() - shift < _UNDERFLOW_LOG:
        return _loglik_gradient_rescaled(eta, ds, starts, n_at)
    e = np.exp(eta - shift)
    num = np.cumsum((X * e[:, None])[::-1], axis=0)[::-1]
    den = np.cumsum(e[::-1])[::-1]
    risk_means = num[starts] / den[starts, None]
    return X[ev].sum(axis=0) - n_at @ risk_means


def _loglik_gradient_rescaled(eta, ds, starts, n_at) -> np.ndarray:
    # Reverse pass with a running max shift; slow but immune to underflow.
    X = ds.X
    n, p = X.shape
    needed = dict(zip(starts.tolist(), n_at.tolist()))
    m = -np.inf
    num = np.zeros(p)
    den = 0.0
    acc = np.zeros(p)
    for i in range(n - 1, -1, -1):
        if eta[i] > m:
            scale = np.exp(m - eta[i]) if np.isfinite(m) else 0.0
            num *= scale
            den *= scale
            m = eta[i]
        e = np.exp(eta[i] - m)
        num += e * X[i]
        den += e
        if i in needed:
            acc += needed[i] * num / den
    return X[ds.events].sum(axis=0) - acc


def objective(w, ds: SurvivalDataset, L: Laplacian, alpha: float, beta: float) -> CoxObjectiveParts:
    """Penalized objective ``loglik/n - alpha*|w|_1 - beta/2 * w'Lw`` (to be maximized)."""
    if not alpha > 0:
        raise ContractError(f"alpha must be > 0, got {alpha}")
    if beta < 0:
        raise ContractError(f"beta must be >= 0, got {beta}")
    return _objective_parts(_check_w(w, ds), ds, L, alpha, beta)


def _objective_parts(w, ds, L, alpha, beta) -> CoxObjectiveParts:
    if L.p != ds.p:
        raise ContractError(f"Laplacian has dimension {L.p}, dataset has {ds.p} features")
    loglik = log_partial_likelihood(w, ds)
    l1 = float(np.abs(w).sum())
    graph = quad_form(L, w)
    total = loglik / ds.n - alpha * l1 - 0.5 * beta * graph
    return CoxObjectiveParts(loglik, l1, graph, total)


def smooth_gradient(w, ds: SurvivalDataset, L: Laplacian, beta: float) -> np.ndarray:
    """Gradient of ``loglik/n - beta/2 * w'Lw``.

    The L1 term is left to the proximal step of the optimizer.
    """
    w = _check_w(w, ds)
    _check_events(ds)
    if L.p != ds.p:
        raise ContractError(f"Laplacian has dimension {L.p}, dataset has {ds.p} features")
    if beta < 0:
        raise ContractError(f"beta must be >= 0, got {beta}")
    return _loglik_gradient(w, ds) / ds.n - beta * (L.matrix @ w)
