"""Bootstrap feature-selection stability: importance ranking, top-k subsets, Jaccard and Kuncheva indices.

Random streams
--------------
Bootstrap replicate ``b`` draws its rows from NumPy's PCG64 generator seeded
with ``SeedSequence(seed, spawn_key=(b, attempt))``. ``attempt`` starts at 0
and is bumped only when a draw contains no events. Both PCG64 and
SeedSequence are platform-independent, so a (seed, b) pair always yields the
same rows.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .data import SurvivalDataset, column_sds, standardize
from .errors import ContractError
from .graph import Laplacian
from .optimizer import CoxModel, FitOptions, fit

log = logging.getLogger(__name__)

MAX_REDRAWS = 100


def importance(model: CoxModel, ds: SurvivalDataset) -> np.ndarray:
    """``|w_i| * sd_i`` with ``sd_i`` the population sd of feature ``i`` in ``ds``."""
    if model.p != ds.p:
        raise ContractError(f"model has {model.p} weights, dataset has {ds.p} features")
    return np.abs(model.weights) * column_sds(ds.X)


def scale_importance(raw) -> np.ndarray:
    """Rescale so the largest importance is 100; an all-zero vector stays zero."""
    raw = np.asarray(raw, dtype=float)
    top = raw.max() if raw.size else 0.0
    if top <= 0:
        return np.zeros_like(raw)
    return 100.0 * raw / top


def top_k(imp, k: int) -> frozenset[int]:
    """Indices of the ``k`` largest importances, ties going to the smaller index."""
    imp = np.asarray(imp, dtype=float)
    p = imp.size
    if not 1 <= k < p:
        raise ContractError(f"k must satisfy 1 <= k < p={p}, got {k}")
    if np.isnan(imp).any():
        raise ContractError("importance contains NaN")
    order = np.argsort(-imp, kind="stable")
    return frozenset(int(i) for i in order[:k])


def _jaccard(sa, sb) -> Fraction:
    union = len(sa | sb)
    if union == 0:
        raise ContractError("Jaccard index undefined for two empty sets")
    return Fraction(len(sa & sb), union)


def _consistency(sa, sb, d: int) -> Fraction:
    k = len(sa)
    if len(sb) != k:
        raise ContractError(f"subsets differ in size ({len(sa)} vs {len(sb)})")
    if not 1 <= k < d:
        raise ContractError(f"need 1 <= k < d, got k={k}, d={d}")
    if any(not 0 <= i < d for i in sa | sb):
        raise ContractError(f"feature index out of range [0, {d})")
    r = len(sa & sb)
    return Fraction(r * d - k * k, k * (d - k))


def jaccard_pair(sa: Iterable[int], sb: Iterable[int]) -> float:
    return float(_jaccard(frozenset(sa), frozenset(sb)))


def consistency_pair(sa: Iterable[int], sb: Iterable[int], d: int) -> float:
    """Kuncheva's consistency index ``(r*d - k**2) / (k*(d - k))``, with ``r`` the overlap."""
    return float(_consistency(frozenset(sa), frozenset(sb), d))


@dataclass(frozen=True)
class FeatureSubsetCollection:
    k: int
    d: int
    subsets: tuple[frozenset[int], ...]

    def __post_init__(self):
        subsets = tuple(frozenset(int(i) for i in s) for s in self.subsets)
        object.__setattr__(self, "subsets", subsets)
        if not 1 <= self.k < self.d:
            raise ContractError(f"need 1 <= k < d, got k={self.k}, d={self.d}")
        for b, s in enumerate(subsets):
            if len(s) != self.k:
                raise ContractError(f"subset {b} has {len(s)} features, expected {self.k}")
            if any(not 0 <= i < self.d for i in s):
                raise ContractError(f"subset {b} has an index outside [0, {self.d})")

    @property
    def B(self) -> int:
        return len(self.subsets)


@dataclass(frozen=True)
class StabilityReport:
    B: int
    k: int
    d: int
    mean_jaccard: float
    mean_consistency: float
    pairwise_jaccard: tuple[float, ...]
    pairwise_consistency: tuple[float, ...]
    selection_frequency: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "B": self.B,
            "k": self.k,
            "d": self.d,
            "mean_jaccard": self.mean_jaccard,
            "mean_consistency": self.mean_consistency,
            "pairwise_jaccard": list(self.pairwise_jaccard),
            "pairwise_consistency": list(self.pairwise_consistency),
            "selection_frequency": list(self.selection_frequency),
        }


def stability_report(coll: FeatureSubsetCollection) -> StabilityReport:
    """Average the two indices over all ``B*(B-1)/2`` subset pairs.

    Means are accumulated in exact rational arithmetic and rounded once.
    """
    if coll.B < 2:
        raise ContractError(f"need at least 2 subsets, got {coll.B}")
    jac, con = [], []
    for sa, sb in combinations(coll.subsets, 2):
        jac.append(_jaccard(sa, sb))
        con.append(_consistency(sa, sb, coll.d))
    freq = np.zeros(coll.d, dtype=int)
    for s in coll.subsets:
        freq[list(s)] += 1
    return StabilityReport(
        B=coll.B,
        k=coll.k,
        d=coll.d,
        mean_jaccard=float(sum(jac) / len(jac)),
        mean_consistency=float(sum(con) / len(con)),
        pairwise_jaccard=tuple(float(v) for v in jac),
        pairwise_consistency=tuple(float(v) for v in con),
        selection_frequency=tuple(int(v) for v in freq),
    )


# ---------------------------------------------------------------------------
# bootstrap protocol


def replicate_rng(seed: int, b: int, attempt: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(b, attempt))))


def bootstrap_sample(ds: SurvivalDataset, seed: int, b: int) -> SurvivalDataset:
    """Replicate ``b``: ``n`` rows drawn with replacement, re-sorted by time.

    A draw without any event is discarded and the next substream tried.
    """
    for attempt in range(MAX_REDRAWS):
        rows = replicate_rng(seed, b, attempt).integers(0, ds.n, size=ds.n)
        sample = ds.subset(rows)
        if sample.q > 0:
            return sample
        log.debug("replicate %d attempt %d drew no events; redrawing", b, attempt)
    raise ContractError(f"bootstrap replicate {b}: no events in {MAX_REDRAWS} draws")


def _replicate_importance(args) -> np.ndarray:
    ds, L, alpha, beta, seed, b, opts, do_standardize = args
    sample = bootstrap_sample(ds, seed, b)
    if do_standardize:
        sample = standardize(sample)
    model = fit(sample, L, alpha, beta, opts, allow_unstandardized=not do_standardize)
    return importance(model, sample)


def bootstrap_importances(
    ds: SurvivalDataset,
    L: Laplacian,
    alpha: float,
    beta: float,
    B: int,
    seed: int,
    opts: FitOptions | None = None,
    *,
    jobs: int = 1,
    do_standardize: bool = True,
) -> np.ndarray:
    """Fit one model per bootstrap replicate; returns the ``B x p`` importance matrix in replicate order."""
    if B < 2:
        raise ContractError(f"need at least 2 bootstraps, got {B}")
    opts = opts or FitOptions()
    tasks = [(ds, L, alpha, beta, seed, b, opts, do_standardize) for b in range(B)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_replicate_importance, tasks))
    else:
        rows = [_replicate_importance(t) for t in tasks]
    return np.vstack(rows)


def subsets_from_importances(imps: np.ndarray, k: int) -> FeatureSubsetCollection:
    imps = np.asarray(imps)
    return FeatureSubsetCollection(k=k, d=imps.shape[1], subsets=tuple(top_k(row, k) for row in imps))


def stability_curve(imps: np.ndarray, ks: Sequence[int]) -> list[StabilityReport]:
    return [stability_report(subsets_from_importances(imps, k)) for k in ks]


def bootstrap_stability(
    ds: SurvivalDataset,
    L: Laplacian,
    alpha: float,
    beta: float,
    B: int,
    k: int,
    seed: int,
    opts: FitOptions | None = None,
    *,
    jobs: int = 1,
    do_standardize: bool = True,
) -> tuple[FeatureSubsetCollection, StabilityReport]:
    if not 1 <= k < ds.p:
        raise ContractError(f"k must satisfy 1 <= k < p={ds.p}, got {k}")
    imps = bootstrap_importances(ds, L, alpha, beta, B, seed, opts, jobs=jobs, do_standardize=do_standardize)
    coll = subsets_from_importances(imps, k)
    return coll, stability_report(coll)
