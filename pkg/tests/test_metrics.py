import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compfs.metrics import auroc, g_sim, group_structure, jaccard, tpr_fdr, union


def test_jaccard():
    assert jaccard({1, 2}, {1, 2}) == 1
    assert jaccard({1, 2}, {3, 4}) == 0
    assert jaccard({3, 4, 5}, {1, 3, 5}) == 0.5
    assert jaccard(set(), set()) == 0


def _frac_gsim(truth, cand):
    # exact rational reference
    total = sum(max(Fraction(len(t & c), len(t | c)) for c in cand) for t in truth)
    return total / max(len(truth), len(cand))


# Worked examples (1-based as printed); expected values are the published ones.
GSIM_TABLE = [
    ([{1, 2}, {3, 4}], [{1, 2}, {3, 4}], Fraction(1)),
    ([{1, 2}, {3, 4}], [{1, 2, 3, 4}], Fraction(1, 2)),
    ([{1, 2}, {3, 4}], [{1, 2, 3}, {1, 4}], Fraction(1, 2)),
    ([{1, 2}, {3, 4}], [{1}, {2}, {3}, {4}], Fraction(1, 4)),
    ([{1, 2}, {3, 4}], [{1, 2}, {3, 4}, {1, 3}, {1, 4}, {2, 3}, {2, 4}], Fraction(1, 3)),
    ([{1}, {2}, {3, 4, 5}], [{1, 2}], Fraction(1, 3)),
    ([{1}, {2}, {3, 4, 5}], [{3}, {1, 3, 5}], Fraction(5, 18)),
    ([{1}, {2}, {3, 4, 5}], [{6}, {7}, {8, 9, 10}], Fraction(0)),
    ([{1, 2}, {1, 3}], [{1, 2}, {1, 3}], Fraction(1)),
    ([{1, 2}, {1, 3}], [{1, 2, 3}], Fraction(2, 3)),
    ([{1, 2}, {1, 3}], [{1}, {2}, {3}], Fraction(1, 3)),
]


@pytest.mark.parametrize("truth,cand,expected", GSIM_TABLE)
def test_gsim_worked_examples(truth, cand, expected):
    truth = [frozenset(t) for t in truth]
    cand = [frozenset(c) for c in cand]
    assert _frac_gsim(truth, cand) == expected
    assert g_sim(truth, cand) == pytest.approx(float(expected), abs=1e-12)


def test_gsim_edge_cases():
    assert g_sim([{1}], []) == 0.0
    with pytest.raises(ValueError):
        g_sim([], [{1}])


def test_tpr_fdr_examples():
    assert tpr_fdr([{1, 2}, {3, 4}], [{1, 2}, {3, 4}]) == (1.0, 0.0)
    assert tpr_fdr([{1, 2}], []) == (0.0, 0.0)
    tpr, fdr = tpr_fdr([{1, 2, 3, 4}], [{1, 2, 5}])
    assert tpr == 0.5 and fdr == pytest.approx(1 / 3)


def test_group_structure_normalises():
    gs = group_structure([[1, 2], [], [2, 1], [3]])
    assert gs == frozenset({frozenset({1, 2}), frozenset({3})})
    with pytest.raises(ValueError):
        group_structure([[5]], n_features=5)


def test_auroc_examples():
    assert auroc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auroc([0.5] * 6, [0, 1, 0, 1, 0, 1]) == 0.5
    assert auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    with pytest.raises(ValueError):
        auroc([0.1, 0.2], [1, 1])


def brute_auroc(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return wins / (len(pos) * len(neg))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 1)), min_size=2, max_size=200))
def test_auroc_matches_pairwise(pairs):
    scores = [s / 4 for s, _ in pairs]
    labels = [l for _, l in pairs]
    if len(set(labels)) < 2:
        return
    assert auroc(scores, labels) == pytest.approx(brute_auroc(scores, labels), abs=1e-12)


groups_st = st.lists(st.frozensets(st.integers(0, 15), min_size=1, max_size=5), min_size=1, max_size=5)


@settings(max_examples=300, deadline=None)
@given(groups_st, groups_st, st.randoms(use_true_random=False))
def test_gsim_properties(truth, cand, rnd):
    v = g_sim(truth, cand)
    assert 0.0 <= v <= 1.0
    shuffled = list(cand)
    rnd.shuffle(shuffled)
    assert g_sim(list(reversed(truth)), shuffled) == pytest.approx(v, abs=1e-12)
    if not union(truth) & union(cand):
        assert v == 0.0
    if set(truth) == set(cand) and len(set(truth)) == len(truth) == len(cand):
        assert v == pytest.approx(1.0)


@settings(max_examples=200, deadline=None)
@given(groups_st, st.data())
def test_tpr_fdr_depends_only_on_unions(truth, data):
    sel = sorted(data.draw(st.frozensets(st.integers(0, 20), max_size=10)))
    # two random partitions of the same selected set
    def partition():
        labels = data.draw(st.lists(st.integers(0, 3), min_size=len(sel), max_size=len(sel)))
        return [frozenset(k for k, l in zip(sel, labels) if l == g) for g in range(4)]
    a, b = partition(), partition()
    assert tpr_fdr(truth, [g for g in a if g]) == tpr_fdr(truth, [g for g in b if g])
