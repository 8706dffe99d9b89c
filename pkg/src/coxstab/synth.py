"""Synthetic survival data with correlated feature groups and planted code structure.

Group ``g`` feature ``i`` is ``sqrt(rho) * z_g + sqrt(1 - rho) * eps_i`` for
standard normal ``z_g`` and ``eps_i``, so members of a group have pairwise
correlation ``rho``. Event times follow a proportional-hazards model with an
exponential baseline; censoring times are exponential with a rate solved for
the requested censored fraction.

Each group gets a two-character tag (``GA``, ``GB``, ...). Its members carry
codes ``GA.1``, ``GA.2``, ... with ``event_key`` ``GA`` and ``window_id``
1, 2, ..., so both graph rules (prefix length 2, and shared event keys across
windows) connect exactly the members of a group. Noise features get unique
tags and no edges.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import brentq

from .data import FeatureMeta, SurvivalDataset
from .errors import ContractError

_NOISE_FIRST = [c for c in string.ascii_uppercase if c != "G"]
_NOISE_SECOND = string.ascii_uppercase + string.digits
MAX_GROUPS = len(string.ascii_uppercase)
MAX_NOISE = len(_NOISE_FIRST) * len(_NOISE_SECOND)


@dataclass(frozen=True)
class SynthConfig:
    n: int = 300
    n_groups: int = 6
    group_size: int = 5
    within_corr: float = 0.9
    n_noise: int = 30
    # full coefficient vector, or {feature index: coefficient}; None means all zero
    true_weights: Mapping[int, float] | Sequence[float] | None = None
    baseline_rate: float = 1.0
    censor_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("n", "n_groups", "group_size", "n_noise"):
            if getattr(self, name) < 0:
                raise ContractError(f"{name} must be >= 0")
        if self.p < 2:
            raise ContractError(f"need at least 2 features, got {self.p}")
        if self.n_groups > MAX_GROUPS:
            raise ContractError(f"at most {MAX_GROUPS} groups supported")
        if self.n_noise > MAX_NOISE:
            raise ContractError(f"at most {MAX_NOISE} noise features supported")
        if not 0 <= self.within_corr < 1:
            raise ContractError(f"within_corr must be in [0, 1), got {self.within_corr}")
        if not self.baseline_rate > 0:
            raise ContractError(f"baseline_rate must be > 0, got {self.baseline_rate}")
        if not 0 <= self.censor_rate < 1:
            raise ContractError(f"censor_rate must be in [0, 1), got {self.censor_rate}")

    @property
    def p(self) -> int:
        return self.n_groups * self.group_size + self.n_noise

    def weight_vector(self) -> np.ndarray:
        w = np.zeros(self.p)
        tw = self.true_weights
        if tw is None:
            return w
        if isinstance(tw, Mapping):
            for i, v in tw.items():
                if not 0 <= int(i) < self.p:
                    raise ContractError(f"true weight index {i} out of range")
                w[int(i)] = v
            return w
        tw = np.asarray(tw, dtype=float)
        if tw.shape != (self.p,):
            raise ContractError(f"true_weights has length {tw.size}, expected {self.p}")
        return tw.copy()

    def group_members(self, g: int) -> list[int]:
        return list(range(g * self.group_size, (g + 1) * self.group_size))

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["true_weights"] = [float(v) for v in self.weight_vector()]
        return d


@dataclass(frozen=True)
class SynthTruth:
    weights: np.ndarray
    groups: list[list[int]]
    censor_param: float
    noise: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "weights": [float(v) for v in self.weights],
            "groups": self.groups,
            "noise": self.noise,
            "censor_param": self.censor_param,
        }


def group_tag(g: int) -> str:
    return "G" + string.ascii_uppercase[g]


def noise_tag(j: int) -> str:
    a, b = divmod(j, len(_NOISE_SECOND))
    return _NOISE_FIRST[a] + _NOISE_SECOND[b]


def synth_meta(cfg: SynthConfig) -> list[FeatureMeta]:
    meta = []
    for g in range(cfg.n_groups):
        tag = group_tag(g)
        for i in range(cfg.group_size):
            fid = len(meta)
            meta.append(FeatureMeta(fid, code=f"{tag}.{i + 1}", window_id=i + 1, event_key=tag, name=f"g{g}_{i}"))
    for j in range(cfg.n_noise):
        tag = noise_tag(j)
        meta.append(FeatureMeta(len(meta), code=f"{tag}.0", window_id=0, event_key=tag, name=f"noise{j}"))
    return meta


def censoring_rate_param(hazards: np.ndarray, censor_rate: float) -> float:
    """Exponential censoring rate ``mu`` with mean ``mu / (mu + h_i)`` equal to ``censor_rate``."""
    if censor_rate == 0:
        return 0.0

    def excess(log_mu):
        mu = np.exp(log_mu)
        return np.mean(mu / (mu + hazards)) - censor_rate

    lo, hi = np.log(hazards.min()) - 50, np.log(hazards.max()) + 50
    return float(np.exp(brentq(excess, lo, hi, xtol=1e-12)))


def generate(cfg: SynthConfig) -> tuple[SurvivalDataset, SynthTruth]:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    rho = cfg.within_corr
    latent = rng.standard_normal((n, cfg.n_groups))
    eps = rng.standard_normal((n, cfg.n_groups * cfg.group_size))
    noise = rng.standard_normal((n, cfg.n_noise))
    grouped = np.sqrt(rho) * np.repeat(latent, cfg.group_size, axis=1) + np.sqrt(1 - rho) * eps
    X = np.hstack([grouped, noise])

    w = cfg.weight_vector()
    hazards = cfg.baseline_rate * np.exp(X @ w)
    T = rng.standard_exponential(n) / hazards
    C_unit = rng.standard_exponential(n)
    tiny = np.finfo(float).tiny
    mu = censoring_rate_param(hazards, cfg.censor_rate)
    if mu > 0:
        C = C_unit / mu
        times = np.minimum(T, C)
        events = T <= C
    else:
        times = T
        events = np.ones(n, dtype=bool)
    times = np.maximum(times, tiny)

    ds = SurvivalDataset.from_arrays(X, times, events, synth_meta(cfg))
    truth = SynthTruth(
        weights=w,
        groups=[cfg.group_members(g) for g in range(cfg.n_groups)],
        censor_param=mu,
        noise=list(range(cfg.n_groups * cfg.group_size, cfg.p)),
    )
    return ds, truth
