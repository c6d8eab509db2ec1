"""Rankings, error metrics and evaluation against ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    LengthMismatch,
    SingleClass,
    SingularMixing,
    ZeroVariance,
)
from .model import ExpressionMatrix, MixingMatrix

DIRECTIONS = ("ascending", "descending")


@dataclass(frozen=True, eq=False)
class DERanking:
    """Genes ordered by the between-column expression ratio.

    order holds gene rows, scores the ratio x1/x2 aligned with order.
    Ties are broken by gene row ascending; infinite scores (x2 == 0) sort
    to the top of a descending ranking.
    """

    order: tuple[int, ...]
    scores: np.ndarray
    direction: str


def de_rank(X: ExpressionMatrix, direction: str = "descending") -> DERanking:
    """Rank genes by x1/x2, the mixing-invariant differential-expression score.

    Mixing two sources is a monotone transform of the pure ratio, so this
    ordering matches the one computed from pure profiles without any
    deconvolution.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    x1 = X.values[:, 0]
    x2 = X.values[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = x1 / x2
    scores[x2 == 0] = np.inf
    idx = np.arange(X.n_genes)
    if direction == "descending":
        order = np.lexsort((idx, -scores))
    else:
        order = np.lexsort((idx, scores))
    ranked = scores[order]
    ranked.setflags(write=False)
    return DERanking(
        order=tuple(int(i) for i in order),
        scores=ranked,
        direction=direction,
    )


def _check_invertible(A: MixingMatrix) -> float:
    det = A.det
    scale = float(np.hypot(A.a11, A.a21) * np.hypot(A.a12, A.a22))
    if abs(det) <= 1e-8 * scale:
        raise SingularMixing(det)
    return det


def _comparison_matrix(A_hat: MixingMatrix, A_true: MixingMatrix) -> np.ndarray:
    """P = inv(A_hat) @ A_true, with the division by det applied last.

    Forming adj(A_hat) @ A_true first keeps P exactly the identity when the
    two matrices are equal, so a perfect estimate scores exactly 0.
    """
    det = _check_invertible(A_hat)
    _check_invertible(A_true)
    adj = np.array([[A_hat.a22, -A_hat.a12], [-A_hat.a21, A_hat.a11]])
    return (adj @ A_true.matrix) / det


def e1_error(A_hat: MixingMatrix, A_true: MixingMatrix) -> float:
    """Normalized cross-talk of inv(A_hat) @ A_true.

    Each row and each column of |P| is divided by its own maximum and the
    excess over that maximum is summed; the result is 0 exactly when the
    estimate matches the truth up to column permutation and positive
    per-column scaling, and grows with any mixing residue.
    """
    P = np.abs(_comparison_matrix(A_hat, A_true))
    row_max = P.max(axis=1)
    col_max = P.max(axis=0)
    total = 0.0
    for i in (0, 1):
        total += P[i, 0] / row_max[i] + P[i, 1] / row_max[i] - 1.0
    for j in (0, 1):
        total += P[0, j] / col_max[j] + P[1, j] / col_max[j] - 1.0
    return float(total)


def resolve_permutation(
    A_hat: MixingMatrix, A_true: MixingMatrix
) -> tuple[int, int]:
    """Match estimated columns to true columns via the comparison matrix.

    Returns perm with perm[j] = the estimated column that corresponds to
    true column j. A clean estimate makes P close to a scaled permutation,
    so the dominant diagonal decides.
    """
    P = np.abs(_comparison_matrix(A_hat, A_true))
    if P[0, 0] * P[1, 1] >= P[0, 1] * P[1, 0]:
        return (0, 1)
    return (1, 0)


def _as_float_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(x.size, y.size)
    if x.size < 2:
        raise LengthMismatch(x.size, y.size)
    return x, y


def pearson(a, b) -> float:
    """Plain Pearson correlation with an exact self-correlation of 1."""
    x, y = _as_float_pair(a, b)
    xc = x - x.mean()
    yc = y - y.mean()
    ss_x = float(xc @ xc)
    ss_y = float(yc @ yc)
    if ss_x == 0 or ss_y == 0:
        raise ZeroVariance("input" if ss_x == 0 else "second input")
    r = float(xc @ yc) / np.sqrt(ss_x * ss_y)
    return float(np.clip(r, -1.0, 1.0))


def rankdata_avg(values) -> np.ndarray:
    """Ranks starting at 1, ties sharing their average rank."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=float)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rank(a, b) -> float:
    """Pearson correlation of the average-tie ranks."""
    x, y = _as_float_pair(a, b)
    return pearson(rankdata_avg(x), rankdata_avg(y))


def marker_overlap(detected, reference) -> tuple[int, int, int]:
    """Venn counts (only detected, both, only reference)."""
    d = set(detected)
    r = set(reference)
    return (len(d - r), len(d & r), len(r - d))


def roc_auc(scores, labels) -> float:
    """Probability a positive outranks a negative, ties counting half.

    Computed from the rank sum of the positive class, which is identical
    to counting correctly ordered (positive, negative) pairs with ties
    contributing 0.5.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise LengthMismatch(s.size, y.size)
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be binary 0/1")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = int(s.size - n_pos)
    if n_pos == 0:
        raise SingleClass(0)
    if n_neg == 0:
        raise SingleClass(1)
    ranks = rankdata_avg(s)
    rank_sum = float(ranks[pos].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def fold_change_scores(ratio_scores) -> np.ndarray:
    """Two-sided differential-expression strength max(r, 1/r).

    Ratios far from 1 in either direction score high, which is the scale
    the fold-change gold standard is defined on. Ratios of 0 and inf both
    map to inf.
    """
    r = np.asarray(ratio_scores, dtype=float)
    with np.errstate(divide="ignore"):
        inv = np.where(r > 0, 1.0 / r, np.inf)
    return np.maximum(r, inv)


def de_truth_labels(pure_ratio_scores, fold_change: float = 2.0) -> np.ndarray:
    """Binary labels: pure ratio beyond fold_change in either direction."""
    if fold_change <= 1:
        raise ValueError(f"fold_change must exceed 1, got {fold_change!r}")
    r = np.asarray(pure_ratio_scores, dtype=float)
    with np.errstate(invalid="ignore"):
        labels = (r > fold_change) | (r < 1.0 / fold_change)
    return labels.astype(int)


@dataclass(frozen=True)
class EvaluationReport:
    """Agreement between a deconvolution result and ground truth.

    pearson_* average the two per-source correlations after matching
    estimated columns to true columns; venn compares detected and true
    marker memberships; auc is None when no truth labels were available.
    """

    e1: float
    pearson_markers: float
    pearson_all: float
    spearman_rank: float
    venn: tuple[int, int, int]
    auc: float | None


def evaluate_deconvolution(
    est_mixing: MixingMatrix,
    true_mixing: MixingMatrix,
    est_sources: np.ndarray,
    true_sources: np.ndarray,
    marker_mask: np.ndarray,
    detected_marker_ids,
    true_marker_ids,
    mixed_de_scores: np.ndarray,
    pure_de_scores: np.ndarray,
    true_de_labels=None,
) -> EvaluationReport:
    """Assemble the full report from arrays aligned on a common gene set.

    est_sources and true_sources are (m, 2) arrays over the same genes in
    the same row order, true_sources with the true column order;
    marker_mask flags the rows belonging to the true marker union.
    """
    est = np.asarray(est_sources, dtype=float)
    true = np.asarray(true_sources, dtype=float)
    if est.shape != true.shape or est.ndim != 2:
        raise LengthMismatch(est.shape[0], true.shape[0])
    perm = resolve_permutation(est_mixing, true_mixing)
    corr_all = [
        pearson(est[:, perm[j]], true[:, j]) for j in (0, 1)
    ]
    mask = np.asarray(marker_mask, dtype=bool)
    corr_markers = [
        pearson(est[mask, perm[j]], true[mask, j]) for j in (0, 1)
    ]
    auc = None
    if true_de_labels is not None:
        auc = roc_auc(fold_change_scores(mixed_de_scores), true_de_labels)
    return EvaluationReport(
        e1=e1_error(est_mixing, true_mixing),
        pearson_markers=float(np.mean(corr_markers)),
        pearson_all=float(np.mean(corr_all)),
        spearman_rank=spearman_rank(mixed_de_scores, pure_de_scores),
        venn=marker_overlap(detected_marker_ids, true_marker_ids),
        auc=auc,
    )
