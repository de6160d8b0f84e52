"""Feature-selection and grouping metrics.

Group structures are plain ``frozenset``s of ``frozenset[int]`` so they hash,
compare and deduplicate for free.
"""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np
from scipy.stats import rankdata

GroupStructure = frozenset  # frozenset[frozenset[int]]


def group_structure(groups: Iterable[Iterable[int]], n_features: int | None = None) -> GroupStructure:
    """Normalise ``groups`` into a GroupStructure, dropping empty and repeated groups."""
    out = set()
    for g in groups:
        g = frozenset(int(k) for k in g)
        if not g:
            continue
        if min(g) < 0 or (n_features is not None and max(g) >= n_features):
            raise ValueError(f"feature index out of range in group {sorted(g)}")
        out.add(g)
    return frozenset(out)


def union(groups: Iterable[Iterable[int]]) -> frozenset[int]:
    return frozenset().union(*map(frozenset, groups))


def jaccard(a: Iterable[int], b: Iterable[int]) -> float:
    a, b = set(a), set(b)
    u = len(a | b)
    if u == 0:
        return 0.0
    return len(a & b) / u


def g_sim(truth: Iterable[Iterable[int]], candidate: Iterable[Iterable[int]]) -> float:
    """Best-match Jaccard summed over true groups, divided by max(#true, #candidate)."""
    truth = [frozenset(g) for g in truth]
    candidate = [frozenset(g) for g in candidate]
    if not truth:
        raise ValueError("g_sim is undefined for an empty ground truth")
    if not candidate:
        return 0.0
    total = sum(max(jaccard(t, c) for c in candidate) for t in truth)
    return total / max(len(truth), len(candidate))


def tpr_fdr(truth: Iterable[Iterable[int]], candidate: Iterable[Iterable[int]]) -> tuple[float, float]:
    true_set = union(truth)
    if not true_set:
        raise ValueError("TPR is undefined for an empty ground truth")
    selected = union(candidate)
    tpr = len(selected & true_set) / len(true_set)
    fdr = len(selected - true_set) / len(selected) if selected else 0.0
    return tpr, fdr


def accuracy(pred, labels) -> float:
    pred, labels = np.asarray(pred), np.asarray(labels)
    return float(np.mean(pred == labels))


def auroc(scores, labels) -> float:
    """Mann-Whitney estimate of the binary ROC area, ties counted as 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = int((labels == 0).sum())
    if n_pos + n_neg != labels.size:
        raise ValueError("labels must be 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auroc needs both classes present")
    ranks = rankdata(scores)  # midranks on ties
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))
