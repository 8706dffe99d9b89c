"""Survival datasets: container, delimited-file I/O, scaling and event aggregation."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, ParseError

META_HEADER = ("name", "code", "window_id", "event_key")


@dataclass(frozen=True)
class FeatureMeta:
    """Identity of one feature column.

    ``window_id`` 0 marks a static feature (age, gender, ...). Features that
    aggregate the same underlying event over different time windows share an
    ``event_key``.
    """

    feature_id: int
    code: str
    window_id: int = 0
    event_key: str = ""
    name: str = ""

    def __post_init__(self):
        if not self.code:
            raise ContractError(f"feature {self.feature_id}: empty code")
        if self.window_id < 0:
            raise ContractError(f"feature {self.feature_id}: negative window_id {self.window_id}")
        if not self.name:
            object.__setattr__(self, "name", f"f{self.feature_id}")
        if not self.event_key:
            object.__setattr__(self, "event_key", self.code)


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SurvivalDataset:
    """Right-censored survival data with rows ordered by non-decreasing time.

    Construct through :meth:`from_arrays`, which sorts the rows; the plain
    constructor expects them sorted already and validates that they are.
    """

    X: np.ndarray
    times: np.ndarray
    events: np.ndarray
    meta: tuple[FeatureMeta, ...]
    standardized: bool = False
    orig_means: np.ndarray | None = None
    orig_sds: np.ndarray | None = None
    _tie_start: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        X = _frozen(self.X, float)
        times = _frozen(self.times, float)
        events = _frozen(self.events, bool)
        if X.ndim != 2:
            raise ContractError(f"X must be 2-D, got shape {X.shape}")
        n, p = X.shape
        if times.shape != (n,) or events.shape != (n,):
            raise ContractError("times and events must have one entry per row of X")
        if len(self.meta) != p:
            raise ContractError(f"meta describes {len(self.meta)} features but X has {p} columns")
        if [m.feature_id for m in self.meta] != list(range(p)):
            raise ContractError("feature ids must be contiguous 0..p-1 in column order")
        if n and not np.all(times > 0):
            raise ContractError("all times must be positive")
        if n > 1 and np.any(np.diff(times) < 0):
            raise ContractError("rows must be sorted by non-decreasing time")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "meta", tuple(self.meta))
        if self.orig_means is not None:
            object.__setattr__(self, "orig_means", _frozen(self.orig_means, float))
            object.__setattr__(self, "orig_sds", _frozen(self.orig_sds, float))

        # first row index of each tie block; rows sharing a time share a risk set
        start = np.arange(n)
        if n > 1:
            new_block = np.r_[True, times[1:] != times[:-1]]
            start = np.maximum.accumulate(np.where(new_block, start, 0))
        object.__setattr__(self, "_tie_start", _frozen(start, np.intp))

    @classmethod
    def from_arrays(cls, X, times, events, meta: Sequence[FeatureMeta] | None = None) -> SurvivalDataset:
        X = np.asarray(X, dtype=float)
        times = np.asarray(times, dtype=float)
        events = np.asarray(events, dtype=bool)
        if meta is None:
            meta = [FeatureMeta(i, code=f"F{i}") for i in range(X.shape[1])]
        order = np.argsort(times, kind="stable")
        return cls(X[order], times[order], events[order], tuple(meta))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def q(self) -> int:
        """Number of uncensored observations."""
        return int(self.events.sum())

    @property
    def names(self) -> list[str]:
        return [m.name for m in self.meta]

    @property
    def tie_start(self) -> np.ndarray:
        return self._tie_start

    def subset(self, rows) -> SurvivalDataset:
        """Rows ``rows`` (repeats allowed) re-sorted by time, as unstandardized data."""
        rows = np.asarray(rows, dtype=np.intp)
        return SurvivalDataset.from_arrays(self.X[rows], self.times[rows], self.events[rows], self.meta)


def column_sds(X: np.ndarray) -> np.ndarray:
    """Population standard deviation (divisor n) of each column."""
    return np.asarray(X, dtype=float).std(axis=0, ddof=0)


def standardize(ds: SurvivalDataset) -> SurvivalDataset:
    """Center every column and scale it to unit population variance.

    Zero-variance columns are only centered. The means and standard
    deviations used are recorded on the returned dataset.
    """
    if ds.standardized:
        raise ContractError("dataset is already standardized")
    means = ds.X.mean(axis=0)
    sds = column_sds(ds.X)
    Z = ds.X - means
    scale = np.where(sds > 0, sds, 1.0)
    Z = Z / scale
    # a second centering pass removes the rounding residue of the first
    Z = Z - Z.mean(axis=0)
    return replace(ds, X=Z, standardized=True, orig_means=means, orig_sds=sds)


def unstandardize(ds: SurvivalDataset) -> SurvivalDataset:
    if not ds.standardized:
        raise ContractError("dataset is not standardized")
    scale = np.where(ds.orig_sds > 0, ds.orig_sds, 1.0)
    X = ds.X * scale + ds.orig_means
    return replace(ds, X=X, standardized=False, orig_means=None, orig_sds=None)


def apply_standardization(X, means, sds) -> np.ndarray:
    """Scale new rows with previously recorded means and standard deviations."""
    X = np.asarray(X, dtype=float)
    means = np.asarray(means, dtype=float)
    sds = np.asarray(sds, dtype=float)
    if X.shape[-1] != means.shape[0]:
        raise ContractError(f"expected {means.shape[0]} features, got {X.shape[-1]}")
    return (X - means) / np.where(sds > 0, sds, 1.0)


# ---------------------------------------------------------------------------
# delimited files


def _read_rows(path: Path):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise ParseError(f"{path}: file not found") from None
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    with fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    return rows


def _parse_float(cell: str, path, line: int, col: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"{path}, line {line}, column {col!r}: non-numeric value {cell!r}") from None
    if not math.isfinite(value):
        raise ParseError(f"{path}, line {line}, column {col!r}: non-finite value {cell!r}")
    return value


def load_meta(path) -> dict[str, tuple[str, int, str]]:
    path = Path(path)
    rows = _read_rows(path)
    header = [h.strip() for h in rows[0]]
    missing = [h for h in META_HEADER if h not in header]
    if missing:
        raise ParseError(f"{path}, line 1: missing columns {missing}")
    idx = {h: header.index(h) for h in META_HEADER}
    out: dict[str, tuple[str, int, str]] = {}
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}, line {line}: expected {len(header)} fields, got {len(row)}")
        name = row[idx["name"]].strip()
        code = row[idx["code"]].strip()
        if not code:
            raise ParseError(f"{path}, line {line}, column 'code': empty code")
        try:
            window_id = int(row[idx["window_id"]])
        except ValueError:
            raise ParseError(
                f"{path}, line {line}, column 'window_id': not an integer {row[idx['window_id']]!r}"
            ) from None
        if window_id < 0:
            raise ParseError(f"{path}, line {line}, column 'window_id': negative value {window_id}")
        if name in out:
            raise ParseError(f"{path}, line {line}, column 'name': duplicate feature {name!r}")
        out[name] = (code, window_id, row[idx["event_key"]].strip() or code)
    return out


def load_dataset(features_path, meta_path) -> SurvivalDataset:
    """Read a feature file and its meta file.

    The feature file has header ``time,event,<name>,...``; the meta file has
    header ``name,code,window_id,event_key`` with one row per feature column.
    Rows are returned sorted by time (stable, so tied rows keep file order).
    """
    features_path = Path(features_path)
    meta = load_meta(meta_path)
    rows = _read_rows(features_path)
    header = [h.strip() for h in rows[0]]
    if header[:2] != ["time", "event"]:
        raise ParseError(f"{features_path}, line 1: header must start with 'time,event', got {header[:2]}")
    names = header[2:]
    if len(set(names)) != len(names):
        raise ParseError(f"{features_path}, line 1: duplicate feature names")
    if len(names) != len(meta) or set(names) != set(meta):
        extra = sorted(set(names) - set(meta))
        absent = sorted(set(meta) - set(names))
        raise ParseError(
            f"meta/feature mismatch: {features_path} has {len(names)} feature columns, "
            f"{meta_path} describes {len(meta)}"
            + (f"; not in meta: {extra}" if extra else "")
            + (f"; not in features: {absent}" if absent else "")
        )

    times, events, X = [], [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"{features_path}, line {line}: expected {len(header)} fields, got {len(row)}")
        t = _parse_float(row[0], features_path, line, "time")
        if t <= 0:
            raise ParseError(f"{features_path}, line {line}, column 'time': time must be positive, got {row[0]!r}")
        e = row[1].strip()
        if e not in ("0", "1"):
            raise ParseError(f"{features_path}, line {line}, column 'event': expected 0 or 1, got {e!r}")
        times.append(t)
        events.append(e == "1")
        X.append([_parse_float(c, features_path, line, col) for c, col in zip(row[2:], names)])

    feature_meta = [
        FeatureMeta(i, code=meta[nm][0], window_id=meta[nm][1], event_key=meta[nm][2], name=nm)
        for i, nm in enumerate(names)
    ]
    X = np.array(X, dtype=float).reshape(len(times), len(names))
    return SurvivalDataset.from_arrays(X, times, events, feature_meta)


def write_meta(meta: Iterable[FeatureMeta], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(META_HEADER)
        for m in meta:
            w.writerow([m.name, m.code, m.window_id, m.event_key])


def write_dataset(ds: SurvivalDataset, features_path, meta_path) -> None:
    """Write ``ds`` in the format read by :func:`load_dataset` (floats are written exactly)."""
    with open(features_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "event", *ds.names])
        for t, e, row in zip(ds.times, ds.events, ds.X):
            w.writerow([repr(float(t)), int(e), *(repr(float(v)) for v in row)])
    write_meta(ds.meta, meta_path)


# ---------------------------------------------------------------------------
# event aggregation


def aggregate_events(event_stream, windows, index_admissions) -> SurvivalDataset:
    """Count coded events per look-back window before each index admission.

    Parameters
    ----------
    event_stream : iterable of (patient, event_key, code, days_before_index)
    windows : sequence of (lo, hi)
        Disjoint half-open day ranges ``[lo, hi)`` before the index admission.
    index_admissions : iterable of (patient, time, event)
        One outcome per patient: days to readmission or censoring, and whether
        the readmission was observed.

    One feature is produced per (code, window) pair that has at least one event.
    Windows get ``window_id`` 1, 2, ... in the order given. Events for
    patients without an index admission, or outside every window, are ignored.
    """
    event_stream = list(event_stream)
    if not event_stream:
        raise ContractError("empty event stream")
    windows = [(float(lo), float(hi)) for lo, hi in windows]
    if not windows:
        raise ContractError("at least one window is required")
    for lo, hi in windows:
        if lo < 0 or hi <= lo:
            raise ContractError(f"invalid window [{lo}, {hi})")
    ordered = sorted(windows)
    for (_, hi), (lo, _) in zip(ordered, ordered[1:]):
        if lo < hi:
            raise ContractError("windows overlap")

    patients, times, events = [], [], []
    row_of = {}
    for patient, time, event in index_admissions:
        if patient in row_of:
            raise ContractError(f"patient {patient!r} has more than one index admission")
        row_of[patient] = len(patients)
        patients.append(patient)
        times.append(float(time))
        events.append(bool(event))

    counts: dict[tuple[str, int], dict[int, int]] = defaultdict(lambda: defaultdict(int))
    key_of_code: dict[str, str] = {}
    for patient, event_key, code, days in event_stream:
        if days < 0:
            raise ContractError(f"event {code!r} for patient {patient!r} has negative days_before_index {days}")
        if key_of_code.setdefault(code, event_key) != event_key:
            raise ContractError(f"code {code!r} appears under event keys {key_of_code[code]!r} and {event_key!r}")
        if patient not in row_of:
            continue
        for w, (lo, hi) in enumerate(windows):
            if lo <= days < hi:
                counts[(code, w)][row_of[patient]] += 1
                break

    keys = sorted(counts)
    X = np.zeros((len(patients), len(keys)))
    meta = []
    for j, (code, w) in enumerate(keys):
        for row, c in counts[(code, w)].items():
            X[row, j] = c
        lo, hi = windows[w]
        meta.append(
            FeatureMeta(j, code=code, window_id=w + 1, event_key=key_of_code[code], name=f"{code}@{lo:g}-{hi:g}")
        )
    return SurvivalDataset.from_arrays(X, times, events, meta)
