import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coxstab.data import FeatureMeta
from coxstab.errors import ContractError
from coxstab.graph import FeatureGraph, build_graph, code_prefix, export_edges, laplacian, quad_form

from oracles import naive_quad


def meta(*rows):
    return [FeatureMeta(i, code=c, window_id=w, event_key=k) for i, (c, w, k) in enumerate(rows)]


def test_code_prefix_strips_dot():
    assert code_prefix("I50.1", 4) == "I501"
    assert code_prefix("I50.1", 3) == "I50"


def test_shared_prefix_gives_code_edge():
    g = build_graph(meta(("I50.1", 0, "a"), ("I50.9", 0, "b")), 3)
    assert g.edges() == [(0, 1)]
    assert g.provenance[(0, 1)] == {"code"}


def test_shared_event_key_across_windows_gives_temporal_edge():
    g = build_graph(meta(("I50", 1, "I50"), ("X99", 2, "I50")), 3)
    assert g.provenance[(0, 1)] == {"temporal"}


def test_same_event_key_same_window_has_no_temporal_edge():
    g = build_graph(meta(("A01", 1, "k"), ("B02", 1, "k")), 3)
    assert g.n_edges == 0


def test_unrelated_codes_no_edge():
    g = build_graph(meta(("I50.1", 0, "I50"), ("J18.0", 0, "J18")), 3)
    assert g.n_edges == 0


def test_both_rules_merge_into_one_edge():
    g = build_graph(meta(("I50", 1, "I50"), ("I50", 2, "I50")), 3)
    assert g.n_edges == 1
    assert g.provenance[(0, 1)] == {"code", "temporal"}
    assert g.adjacency.toarray().tolist() == [[0, 1], [1, 0]]


def test_temporal_edges_form_clique_over_windows():
    g = build_graph(meta(*[(f"Z{w}{w}", w, "E") for w in (1, 2, 3, 4)]), 3)
    assert g.edges() == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def test_prefix_len_validation():
    with pytest.raises(ContractError):
        build_graph(meta(("A", 0, "A")), 0)
    with pytest.raises(ContractError):
        build_graph([], 3)


def test_graph_is_permutation_invariant():
    rng = np.random.default_rng(5)
    codes = ["I50.1", "I50.9", "I51.0", "J18.0", "J18.1", "N18.3"]
    rows = [(c, int(rng.integers(0, 3)), c[:2]) for c in codes]
    g = build_graph(meta(*rows), 3)
    perm = rng.permutation(len(rows))
    gp = build_graph(meta(*[rows[i] for i in perm]), 3)
    mapped = sorted(tuple(sorted((int(perm[i]), int(perm[j])))) for i, j in gp.edges())
    assert mapped == g.edges()


def test_laplacian_path_graph():
    L = laplacian(FeatureGraph.from_edges(3, [(0, 1), (1, 2)]))
    assert L.toarray().tolist() == [[1, -1, 0], [-1, 2, -1], [0, -1, 1]]


def test_laplacian_empty_graph():
    assert laplacian(FeatureGraph.from_edges(4, [])).toarray().tolist() == np.zeros((4, 4)).tolist()


def test_laplacian_complete_graph():
    L = laplacian(FeatureGraph.from_edges(3, [(0, 1), (0, 2), (1, 2)])).toarray()
    assert np.diag(L).tolist() == [2, 2, 2]
    assert L[~np.eye(3, dtype=bool)].tolist() == [-1] * 6


@pytest.mark.parametrize(
    "edges, w, expected",
    [
        ([(0, 1), (1, 2)], [1, 1, 1], 0.0),
        ([(0, 1)], [1, 0], 1.0),
        ([(0, 1)], [3, -1], 16.0),
    ],
)
def test_quad_form_examples(edges, w, expected):
    L = laplacian(FeatureGraph.from_edges(len(w), edges))
    assert quad_form(L, w) == expected


def test_quad_form_dimension_mismatch():
    L = laplacian(FeatureGraph.from_edges(3, [(0, 1)]))
    with pytest.raises(ContractError):
        quad_form(L, [1.0, 2.0])


@st.composite
def graph_and_weights(draw):
    p = draw(st.integers(1, 15))
    pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True) if pairs else st.just([]))
    w = draw(st.lists(st.floats(-100, 100, allow_nan=False), min_size=p, max_size=p))
    return FeatureGraph.from_edges(p, edges), np.array(w)


@settings(max_examples=100, deadline=None)
@given(graph_and_weights())
def test_laplacian_properties(gw):
    g, w = gw
    L = laplacian(g)
    dense = L.toarray()
    assert np.all(dense.sum(axis=1) == 0)
    assert np.array_equal(dense, dense.T)
    q = quad_form(L, w)
    ref = naive_quad(g.adjacency.toarray(), w)
    assert q >= -1e-9 * (1 + abs(ref))
    assert abs(q - ref) <= 1e-10 * max(1.0, abs(ref))
    assert quad_form(L, np.full(g.p, 3.7)) == 0.0


def test_quad_form_zero_iff_constant_on_components():
    # components {0,1,2} and {3,4}, isolated 5
    L = laplacian(FeatureGraph.from_edges(6, [(0, 1), (1, 2), (3, 4)]))
    assert quad_form(L, [2, 2, 2, -1, -1, 9]) == 0
    assert quad_form(L, [2, 2, 2.1, -1, -1, 9]) > 0
    assert quad_form(L, [2, 2, 2, -1, -1.5, 9]) > 0


def test_export_edges(tmp_path):
    g = build_graph(meta(("I50", 1, "I50"), ("I50", 2, "I50"), ("I51", 0, "x"), ("Q00", 1, "x"), ("R00", 2, "x")), 3)
    export_edges(g, tmp_path / "e.csv")
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "i,j,tag"
    assert "0,1,code+temporal" in lines
    assert "3,4,temporal" in lines
    assert "2,3,temporal" in lines
