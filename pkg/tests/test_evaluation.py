import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coxstab.errors import ContractError
from coxstab.evaluation import (
    EXCLUDED,
    NEGATIVE,
    POSITIVE,
    HorizonLabeling,
    auc,
    auc_pairs,
    auc_ranks,
    _twice_u_pairs,
    _twice_u_ranks,
    risk_score,
    risk_scores,
)
from coxstab.optimizer import CoxModel

from oracles import auc_by_enumeration


def labeled(pos, neg):
    scores = np.array(list(pos) + list(neg), dtype=float)
    labels = np.array([POSITIVE] * len(pos) + [NEGATIVE] * len(neg))
    return scores, labels


@pytest.mark.parametrize(
    "pos, neg, expected",
    [
        ([3, 4], [1, 2], 1.0),
        ([1, 2], [3, 4], 0.0),
        ([5, 5, 5], [5, 5], 0.5),
        ([2, 4], [1, 3], 0.75),
    ],
)
def test_auc_examples(pos, neg, expected):
    scores, labels = labeled(pos, neg)
    assert auc_pairs(scores, labels) == expected
    assert auc_ranks(scores, labels) == expected


def test_horizon_labeling_rules():
    lab = HorizonLabeling.from_survival([10, 182, 182, 200, 50, 300], [1, 1, 0, 0, 0, 1], 182)
    assert lab.labels.tolist() == [POSITIVE, POSITIVE, EXCLUDED, NEGATIVE, EXCLUDED, NEGATIVE]
    assert (lab.n_pos, lab.n_neg, lab.n_excluded) == (2, 2, 2)
    with pytest.raises(ContractError):
        HorizonLabeling.from_survival([1], [1], 0)


def test_excluded_subjects_do_not_count():
    scores = np.array([2.0, 1.0, 99.0, -99.0])
    labels = np.array([POSITIVE, NEGATIVE, EXCLUDED, EXCLUDED])
    assert auc_pairs(scores, labels) == 1.0


def test_degenerate_labeling_raises():
    with pytest.raises(ContractError, match="degenerate"):
        auc_pairs([1.0, 2.0], np.array([POSITIVE, POSITIVE]))
    with pytest.raises(ContractError, match="degenerate"):
        auc_ranks([1.0, 2.0], np.array([NEGATIVE, EXCLUDED]))
    with pytest.raises(ContractError):
        auc_pairs([1.0], np.array([POSITIVE, NEGATIVE]))


@st.composite
def scored_labels(draw):
    n = draw(st.integers(2, 60))
    scores = draw(st.lists(st.integers(-5, 5).map(float), min_size=n, max_size=n))
    labels = draw(st.lists(st.sampled_from([POSITIVE, NEGATIVE, EXCLUDED]), min_size=n, max_size=n))
    labels[0], labels[1] = POSITIVE, NEGATIVE
    return np.array(scores), np.array(labels)


@settings(max_examples=150, deadline=None)
@given(scored_labels())
def test_auc_invariances(data):
    scores, labels = data
    a = auc_pairs(scores, labels)
    pos = np.flatnonzero(labels == POSITIVE)
    neg = np.flatnonzero(labels == NEGATIVE)
    assert a == auc_by_enumeration(scores, pos, neg)
    assert auc_ranks(scores, labels) == a
    # strictly increasing transforms leave every comparison intact
    assert auc_pairs(np.exp(scores) * 3 + 1, labels) == a
    assert auc_pairs(scores ** 3, labels) == a
    # complement identity on the exact integer numerators
    p, n = scores[pos], scores[neg]
    total = 2 * p.size * n.size
    assert _twice_u_pairs(p, n) + _twice_u_pairs(-p, -n) == total
    assert _twice_u_ranks(p, n) + _twice_u_ranks(-p, -n) == total
    assert auc_pairs(-scores, labels) == pytest.approx(1 - a, abs=1e-15)


def test_rank_and_pair_forms_agree_on_random_scores():
    rng = np.random.default_rng(0)
    for n in (2, 5, 50, 200):
        for _ in range(10):
            scores = np.round(rng.standard_normal(n), 1)
            labels = rng.integers(0, 2, size=n)
            labels[:2] = [POSITIVE, NEGATIVE]
            assert auc_ranks(scores, labels) == auc_pairs(scores, labels)


def test_auc_result_interval():
    rng = np.random.default_rng(1)
    y = rng.integers(0, 2, size=200)
    scores = y + rng.standard_normal(200)
    lab = HorizonLabeling(182.0, y.astype(np.int8))
    res = auc(scores, lab)
    assert res.ci_low <= res.auc <= res.ci_high
    assert 0.6 < res.auc < 0.9
    assert res.n_pos + res.n_neg == 200 and res.n_excluded == 0
    assert auc(scores, lab) == res
    assert set(res.to_dict()) == {"horizon_days", "auc", "ci_low", "ci_high", "n_pos", "n_neg", "n_excluded"}


def test_risk_score_examples():
    m = CoxModel(weights=np.array([0.5, -1.0, 0.0]), alpha=0.1, beta=0.0)
    assert risk_score(m, [2.0, 1.0, 7.0]) == 0.0
    assert risk_score(m, [0.0, -2.0, 0.0]) == 2.0
    np.testing.assert_array_equal(risk_scores(m, [[2.0, 1.0, 7.0], [0.0, -2.0, 0.0]]), [0.0, 2.0])
    with pytest.raises(ContractError):
        risk_score(m, [1.0, 2.0])
    with pytest.raises(ContractError):
        risk_scores(m, [[1.0, 2.0]])
