"""Feature graph from shared code prefixes and event recurrences, and its Laplacian."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .data import FeatureMeta
from .errors import ContractError

DEFAULT_PREFIX_LEN = 3

CODE = "code"
TEMPORAL = "temporal"


def code_prefix(code: str, prefix_len: int) -> str:
    """Leading ``prefix_len`` characters of ``code`` with '.' separators removed."""
    return code.replace(".", "")[:prefix_len]


@dataclass(frozen=True, eq=False)
class FeatureGraph:
    """Undirected 0/1 feature graph.

    ``provenance`` maps each edge ``(i, j)`` with ``i < j`` to the set of
    rules that produced it.
    """

    p: int
    adjacency: sp.csr_matrix
    provenance: Mapping[tuple[int, int], frozenset]

    @classmethod
    def from_edges(cls, p: int, edges) -> FeatureGraph:
        """Build from ``(i, j)`` pairs or a mapping ``(i, j) -> tags``."""
        if isinstance(edges, Mapping):
            items = edges.items()
        else:
            items = ((e, frozenset()) for e in edges)
        prov: dict[tuple[int, int], frozenset] = {}
        for (i, j), tags in items:
            i, j = int(i), int(j)
            if i == j:
                raise ContractError(f"self loop at node {i}")
            if not (0 <= i < p and 0 <= j < p):
                raise ContractError(f"edge ({i}, {j}) out of range for {p} nodes")
            key = (min(i, j), max(i, j))
            prov[key] = prov.get(key, frozenset()) | frozenset(tags)
        if prov:
            ij = np.array(sorted(prov), dtype=np.intp)
            rows = np.r_[ij[:, 0], ij[:, 1]]
            cols = np.r_[ij[:, 1], ij[:, 0]]
        else:
            rows = cols = np.empty(0, dtype=np.intp)
        A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(p, p))
        A.sort_indices()
        return cls(p, A, prov)

    @property
    def n_edges(self) -> int:
        return len(self.provenance)

    def edges(self) -> list[tuple[int, int]]:
        return sorted(self.provenance)


def build_graph(meta: Sequence[FeatureMeta], prefix_len: int = DEFAULT_PREFIX_LEN) -> FeatureGraph:
    """Connect features whose codes share a prefix or that track the same event.

    Two features get a ``code`` edge when their dot-stripped codes agree on
    the first ``prefix_len`` characters, and a ``temporal`` edge when they
    share an ``event_key`` but sit in different time windows. A pair related
    both ways still gets a single edge.
    """
    if prefix_len < 1:
        raise ContractError(f"prefix_len must be >= 1, got {prefix_len}")
    if not meta:
        raise ContractError("meta is empty")

    edges: dict[tuple[int, int], set] = defaultdict(set)

    by_prefix = defaultdict(list)
    for m in meta:
        by_prefix[code_prefix(m.code, prefix_len)].append(m.feature_id)
    for ids in by_prefix.values():
        for i, j in combinations(sorted(ids), 2):
            edges[(i, j)].add(CODE)

    by_event = defaultdict(list)
    for m in meta:
        by_event[m.event_key].append(m)
    for group in by_event.values():
        for a, b in combinations(group, 2):
            if a.window_id != b.window_id:
                i, j = sorted((a.feature_id, b.feature_id))
                edges[(i, j)].add(TEMPORAL)

    return FeatureGraph.from_edges(len(meta), {e: frozenset(t) for e, t in edges.items()})


@dataclass(frozen=True, eq=False)
class Laplacian:
    p: int
    matrix: sp.csr_matrix

    def __post_init__(self):
        upper = sp.triu(self.matrix, k=1).tocoo()
        # edge list with weights A_ij = -L_ij, kept for the difference form of w'Lw
        object.__setattr__(self, "_edges", (upper.row, upper.col, -upper.data))

    def __matmul__(self, w):
        return self.matrix @ w

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def laplacian(g: FeatureGraph) -> Laplacian:
    """Graph Laplacian ``diag(A 1) - A``."""
    A = g.adjacency
    degree = np.asarray(A.sum(axis=1)).ravel()
    L = (sp.diags(degree) - A).tocsr()
    L.sort_indices()
    return Laplacian(g.p, L)


def empty_laplacian(p: int) -> Laplacian:
    return Laplacian(p, sp.csr_matrix((p, p)))


def quad_form(L: Laplacian, w) -> float:
    """``w' L w``, summed as ``A_ij * (w_i - w_j)**2`` over graph edges.

    The difference form is exactly zero on constant vectors and never negative.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (L.p,):
        raise ContractError(f"weight vector has shape {w.shape}, expected ({L.p},)")
    i, j, a = L._edges
    return float(np.sum(a * (w[i] - w[j]) ** 2))


def edge_rows(g: FeatureGraph) -> list[list]:
    """``[i, j, tag]`` per edge; edges found by both rules get tag ``code+temporal``."""
    return [[i, j, "+".join(sorted(g.provenance[(i, j)]))] for (i, j) in g.edges()]


def export_edges(g: FeatureGraph, path) -> None:
    """Write the edge list as ``i,j,tag`` CSV rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "tag"])
        w.writerows(edge_rows(g))
