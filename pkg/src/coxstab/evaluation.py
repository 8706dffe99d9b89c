"""Risk scores and fixed-horizon discrimination (AUC) for fitted models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ContractError
from .optimizer import CoxModel

DEFAULT_HORIZON_DAYS = 182.0
DEFAULT_CI_RESAMPLES = 2000
DEFAULT_CI_SEED = 0

POSITIVE, NEGATIVE, EXCLUDED = 1, 0, -1


@dataclass(frozen=True, eq=False)
class HorizonLabeling:
    """Per-subject outcome at a horizon.

    Positive: event at or before the horizon. Negative: still under
    observation after it. Excluded: censored at or before it, outcome unknown.
    """

    horizon: float
    labels: np.ndarray

    @classmethod
    def from_survival(cls, times, events, horizon: float) -> HorizonLabeling:
        if not horizon > 0:
            raise ContractError(f"horizon must be > 0, got {horizon}")
        times = np.asarray(times, dtype=float)
        events = np.asarray(events, dtype=bool)
        labels = np.full(times.shape, EXCLUDED, dtype=np.int8)
        labels[events & (times <= horizon)] = POSITIVE
        labels[times > horizon] = NEGATIVE
        return cls(float(horizon), labels)

    @property
    def n_pos(self) -> int:
        return int(np.sum(self.labels == POSITIVE))

    @property
    def n_neg(self) -> int:
        return int(np.sum(self.labels == NEGATIVE))

    @property
    def n_excluded(self) -> int:
        return int(np.sum(self.labels == EXCLUDED))


def risk_score(model: CoxModel, x) -> float:
    """Linear predictor ``w . x`` for one standardized feature row; higher means higher hazard."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.p,):
        raise ContractError(f"feature vector has shape {x.shape}, expected ({model.p},)")
    return float(model.weights @ x)


def risk_scores(model: CoxModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.p:
        raise ContractError(f"feature matrix has shape {X.shape}, expected (n, {model.p})")
    return X @ model.weights


def _split(scores, labels):
    scores = np.asarray(scores, dtype=float)
    lab = labels.labels if isinstance(labels, HorizonLabeling) else np.asarray(labels)
    if scores.shape != lab.shape:
        raise ContractError(f"{scores.size} scores for {lab.size} labels")
    pos, neg = scores[lab == POSITIVE], scores[lab == NEGATIVE]
    if pos.size == 0 or neg.size == 0:
        raise ContractError(f"degenerate labeling: {pos.size} positives, {neg.size} negatives")
    return pos, neg


def _twice_u_pairs(pos, neg) -> int:
    diff = pos[:, None] - neg[None, :]
    return 2 * int(np.count_nonzero(diff > 0)) + int(np.count_nonzero(diff == 0))


def _twice_u_ranks(pos, neg) -> int:
    ranks = rankdata(np.concatenate([pos, neg]), method="average")
    # average ranks are half-integers, so twice their sum is an exact integer
    twice_sum = int(round(2.0 * ranks[: pos.size].sum()))
    return twice_sum - pos.size * (pos.size + 1)


def auc_pairs(scores, labels) -> float:
    """Fraction of (positive, negative) pairs ranked correctly, ties counting one half."""
    pos, neg = _split(scores, labels)
    return _twice_u_pairs(pos, neg) / (2 * pos.size * neg.size)


def auc_ranks(scores, labels) -> float:
    """Same value as :func:`auc_pairs`, via the rank-sum form in O(n log n)."""
    pos, neg = _split(scores, labels)
    return _twice_u_ranks(pos, neg) / (2 * pos.size * neg.size)


@dataclass(frozen=True)
class AUCResult:
    horizon_days: float
    auc: float
    ci_low: float
    ci_high: float
    n_pos: int
    n_neg: int
    n_excluded: int

    def to_dict(self) -> dict:
        return {
            "horizon_days": self.horizon_days,
            "auc": self.auc,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "n_excluded": self.n_excluded,
        }


def auc(
    scores,
    labels: HorizonLabeling,
    *,
    n_resamples: int = DEFAULT_CI_RESAMPLES,
    seed: int = DEFAULT_CI_SEED,
    level: float = 0.95,
) -> AUCResult:
    """AUC with a percentile bootstrap interval over subjects.

    Only positive and negative subjects are resampled; resamples missing one
    of the classes are dropped.
    """
    scores = np.asarray(scores, dtype=float)
    point = auc_pairs(scores, labels)
    keep = labels.labels != EXCLUDED
    s, y = scores[keep], labels.labels[keep]
    rng = np.random.default_rng(seed)
    stats = []
    for _ in range(n_resamples):
        idx = rng.integers(0, s.size, size=s.size)
        ys = y[idx]
        n_pos = int(np.count_nonzero(ys == POSITIVE))
        if n_pos == 0 or n_pos == ys.size:
            continue
        ss = s[idx]
        stats.append(_twice_u_ranks(ss[ys == POSITIVE], ss[ys == NEGATIVE]) / (2 * n_pos * (ys.size - n_pos)))
    if stats:
        tail = 100 * (1 - level) / 2
        lo, hi = np.percentile(stats, [tail, 100 - tail])
    else:
        lo = hi = float("nan")
    return AUCResult(labels.horizon, point, float(lo), float(hi), labels.n_pos, labels.n_neg, labels.n_excluded)
