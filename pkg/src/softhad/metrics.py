"""Ranking agreement between predicted and true anomaly scores.

The agreement score is the fraction of concordant pairs among all pairs
whose true scores differ; pairs tied in the predicted score earn half
credit, and pairs tied in the true score are excluded.  With -1/+1 truth
it reduces to the ROC AUC.  The fast path runs in O(n log n) on rank
statistics; an O(n^2) pair-counting reference is kept alongside it so the
two can be checked against each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_binary_labels, check_same_length


@dataclass(frozen=True)
class AgreementResult:
    score: float
    n_pairs: int


def agreement_score(predicted, truth) -> AgreementResult:
    """Concordant-pair fraction, computed via sorting and inversion counts."""
    predicted, truth = _check_scores(predicted, truth)
    concordant, pred_ties, comparable = _pair_counts_fast(predicted, truth)
    if comparable == 0:
        raise ValueError("all true scores are identical: no comparable pairs")
    return AgreementResult(
        score=(concordant + 0.5 * pred_ties) / comparable, n_pairs=comparable
    )


def agreement_score_brute_force(predicted, truth) -> AgreementResult:
    """O(n^2) reference implementation counting every pair explicitly."""
    predicted, truth = _check_scores(predicted, truth)
    dt = truth[:, None] - truth[None, :]
    dp = predicted[:, None] - predicted[None, :]
    upper = np.triu(np.ones((len(truth), len(truth)), dtype=bool), k=1)
    comparable_mask = upper & (dt != 0)
    comparable = int(np.count_nonzero(comparable_mask))
    if comparable == 0:
        raise ValueError("all true scores are identical: no comparable pairs")
    concordant = int(np.count_nonzero(comparable_mask & (dt * dp > 0)))
    pred_ties = int(np.count_nonzero(comparable_mask & (dp == 0)))
    return AgreementResult(
        score=(concordant + 0.5 * pred_ties) / comparable, n_pairs=comparable
    )


def roc_auc(scores, y) -> float:
    """AUC of ``scores`` against -1/+1 truth; identical to the agreement
    score with the labels used as true scores."""
    scores = np.asarray(scores, dtype=float)
    y = check_binary_labels(y, require_both=True)
    check_same_length(scores, y, names=("scores", "y"))
    return agreement_score(scores, y.astype(float)).score


def _check_scores(predicted, truth) -> tuple[np.ndarray, np.ndarray]:
    predicted = np.asarray(predicted, dtype=float)
    truth = np.asarray(truth, dtype=float)
    check_same_length(predicted, truth, names=("predicted", "truth"))
    if predicted.ndim != 1:
        raise ValueError("scores must be 1-dimensional")
    if len(predicted) < 2:
        raise ValueError("need at least 2 scores to compare orderings")
    if not (np.isfinite(predicted).all() and np.isfinite(truth).all()):
        raise ValueError("scores must be finite")
    return predicted, truth


def _pair_counts_fast(predicted: np.ndarray, truth: np.ndarray):
    """Integer pair counts (concordant, predicted-tie, comparable).

    Uses the Kendall-style decomposition: sort by (truth, predicted) and
    count strict inversions of the predicted sequence by merge sort; tie
    groups are counted from sorted runs.
    """
    n = len(predicted)
    n0 = n * (n - 1) // 2
    order = np.lexsort((predicted, truth))
    t_sorted = truth[order]
    p_sorted = predicted[order]

    truth_ties = _tie_pairs(t_sorted)
    pred_ties_total = _tie_pairs(np.sort(predicted, kind="stable"))
    both = (t_sorted[1:] == t_sorted[:-1]) & (p_sorted[1:] == p_sorted[:-1])
    joint_ties = _run_pairs(both)

    discordant = _count_inversions(p_sorted.tolist())
    comparable = n0 - truth_ties
    strictly_ordered = n0 - truth_ties - pred_ties_total + joint_ties
    concordant = strictly_ordered - discordant
    pred_ties = pred_ties_total - joint_ties
    return concordant, pred_ties, comparable


def _tie_pairs(sorted_values: np.ndarray) -> int:
    same = sorted_values[1:] == sorted_values[:-1]
    return _run_pairs(same)


def _run_pairs(same_as_previous: np.ndarray) -> int:
    total = 0
    run = 1
    for flag in same_as_previous:
        if flag:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    total += run * (run - 1) // 2
    return total


def _count_inversions(values: list) -> int:
    """Pairs (i < j) with values[i] > values[j], by merge sort."""
    count = 0

    def merge_sort(arr):
        nonlocal count
        if len(arr) <= 1:
            return arr
        mid = len(arr) // 2
        left = merge_sort(arr[:mid])
        right = merge_sort(arr[mid:])
        merged = []
        i = j = 0
        while i < len(left) and j < len(right):
            if right[j] < left[i]:
                count += len(left) - i
                merged.append(right[j])
                j += 1
            else:
                merged.append(left[i])
                i += 1
        merged.extend(left[i:])
        merged.extend(right[j:])
        return merged

    merge_sort(values)
    return count
