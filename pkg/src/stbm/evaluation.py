"""Scoring fitted models against ground truth: adjusted Rand index over
node partitions and over per-edge majority-topic partitions."""

from __future__ import annotations

import numpy as np

from .corpus import Corpus

__all__ = ["ari", "edge_partition"]


def ari(labels_a, labels_b) -> float:
    """Adjusted Rand index between two partitions of the same items.

    Computed from the contingency table; invariant to relabeling.  When the
    chance-correction denominator vanishes (both partitions degenerate,
    e.g. a single cluster or all singletons on both sides) the index is 1.0
    exactly when the partitions agree.
    """
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.shape != b.shape:
        raise ValueError(f"label vectors differ in length: {a.size} vs {b.size}")
    if a.size < 1:
        raise ValueError("empty partitions")

    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    n_a = ai.max() + 1
    n_b = bi.max() + 1
    table = np.zeros((n_a, n_b), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)

    def comb2(x):
        x = np.asarray(x, dtype=np.float64)
        return x * (x - 1.0) / 2.0

    sum_cells = comb2(table).sum()
    sum_rows = comb2(table.sum(axis=1)).sum()
    sum_cols = comb2(table.sum(axis=0)).sum()
    total = comb2(a.size)
    if total == 0:
        return 1.0
    expected = sum_rows * sum_cols / total
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def edge_partition(edge_topics, c: Corpus) -> np.ndarray:
    """Topic labels over the present edges in canonical order.

    ``edge_topics`` maps (source, target) pairs to topic labels, as
    produced by either the generator's ground truth or a fitted model.
    """
    pairs = c.edge_list()
    keys = {c.canonical_pair(*k): v for k, v in edge_topics.items()}
    if set(keys) != set(pairs):
        missing = set(pairs) - set(keys)
        extra = set(keys) - set(pairs)
        raise ValueError(f"edge sets differ (missing={len(missing)}, "
                         f"extra={len(extra)})")
    return np.array([keys[p] for p in pairs], dtype=np.int64)
