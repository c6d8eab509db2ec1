"""Shared data model: expression matrices, mixing matrices, marker sets.

Construction normally goes through the ``validate_*`` factories, which
enforce the invariants (finite non-negative values, unique gene ids,
linearly independent mixing columns). The dataclasses themselves are plain
containers, so internal code can build instances that deliberately step
outside the validated domain -- the one sanctioned case is an unclamped
source estimate that still carries negative numerical artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DuplicateGeneId,
    InvalidMarkerSets,
    NegativeEntry,
    NegativeValue,
    NonFiniteValue,
    RowSumViolation,
    ShapeMismatch,
    SingularMixing,
)

AXIS_KINDS = ("samples", "tissues")
MATRIX_FORMS = ("raw", "proportion")

# |det| must exceed this fraction of the product of column norms.
SINGULARITY_RTOL = 1e-8
# Proportion rows must sum to 1 within this absolute tolerance.
ROW_SUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ExpressionMatrix:
    """Two-column expression profile with one row per gene.

    ``axis_kind`` records whether the columns are observed mixtures
    ("samples") or pure per-source profiles ("tissues"). It labels reports
    and file headers; no computation branches on it.
    """

    gene_ids: tuple[str, ...]
    values: np.ndarray
    axis_kind: str = "samples"

    @property
    def n_genes(self) -> int:
        return len(self.gene_ids)

    def column(self, k: int) -> np.ndarray:
        return self.values[:, k]

    def row(self, i: int) -> np.ndarray:
        return self.values[i]


@dataclass(frozen=True)
class MixingMatrix:
    """2x2 non-negative mixing matrix.

    Rows index samples, columns index sources: sample k measures
    ``a_k1 * s_1 + a_k2 * s_2``. In "proportion" form each row sums to 1,
    so entries are the per-sample source fractions.
    """

    a11: float
    a12: float
    a21: float
    a22: float
    form: str = "raw"

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    def column(self, j: int) -> np.ndarray:
        if j == 0:
            return np.array([self.a11, self.a21])
        return np.array([self.a12, self.a22])

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21


@dataclass(frozen=True)
class MarkerSets:
    """Row indices of the detected (or planted) marker genes.

    ``mg1`` collects genes attributed to source 1 and ``mg2`` to source 2;
    ``k_min`` and ``k_max`` are the extreme finite ratios x2/x1 observed in
    the data the sets were derived from, and ``epsilon`` the detection
    tolerance that produced them (0 for exact / planted sets).
    """

    mg1: tuple[int, ...]
    mg2: tuple[int, ...]
    k_min: float
    k_max: float
    epsilon: float


def validate_expression_matrix(
    gene_ids, values, axis_kind: str = "samples"
) -> ExpressionMatrix:
    """Check and freeze an expression matrix.

    Raises ShapeMismatch, DuplicateGeneId, NonFiniteValue or NegativeValue;
    on success every value is finite and >= 0 and the array is read-only.
    """
    if axis_kind not in AXIS_KINDS:
        raise ValueError(f"axis_kind must be one of {AXIS_KINDS}")
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ShapeMismatch(f"values are not numeric: {exc}") from exc
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ShapeMismatch(
            f"expected an n x 2 value array, got shape {arr.shape}"
        )
    ids = tuple(str(g) for g in gene_ids)
    if len(ids) != arr.shape[0]:
        raise ShapeMismatch(
            f"{len(ids)} gene ids for {arr.shape[0]} value rows"
        )
    if len(ids) < 2:
        raise ShapeMismatch(f"need at least 2 genes, got {len(ids)}")
    seen: set[str] = set()
    for g in ids:
        if g in seen:
            raise DuplicateGeneId(g)
        seen.add(g)
    bad = ~np.isfinite(arr)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise NonFiniteValue(row, col)
    neg = arr < 0
    if neg.any():
        row, col = np.argwhere(neg)[0]
        raise NegativeValue(row, col, arr[row, col])
    arr.setflags(write=False)
    return ExpressionMatrix(gene_ids=ids, values=arr, axis_kind=axis_kind)


def validate_mixing_matrix(entries, form: str = "raw") -> MixingMatrix:
    """Check a 2x2 mixing matrix.

    Entries must be finite and non-negative, the columns linearly
    independent (|det| above SINGULARITY_RTOL relative to the product of
    the column norms), and in proportion form each row must sum to 1
    within ROW_SUM_TOL.
    """
    if form not in MATRIX_FORMS:
        raise ValueError(f"form must be one of {MATRIX_FORMS}")
    arr = np.array(entries, dtype=float)
    if arr.shape != (2, 2):
        raise ShapeMismatch(f"expected a 2x2 matrix, got shape {arr.shape}")
    bad = ~np.isfinite(arr)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise NonFiniteValue(row, col)
    neg = arr < 0
    if neg.any():
        row, col = np.argwhere(neg)[0]
        raise NegativeEntry(row, col, arr[row, col])
    det = arr[0, 0] * arr[1, 1] - arr[0, 1] * arr[1, 0]
    scale = float(np.hypot(arr[0, 0], arr[1, 0]) * np.hypot(arr[0, 1], arr[1, 1]))
    if abs(det) <= SINGULARITY_RTOL * scale:
        raise SingularMixing(det)
    if form == "proportion":
        for row in (0, 1):
            total = arr[row, 0] + arr[row, 1]
            if abs(total - 1.0) > ROW_SUM_TOL:
                raise RowSumViolation(row, total)
    return MixingMatrix(
        a11=float(arr[0, 0]),
        a12=float(arr[0, 1]),
        a21=float(arr[1, 0]),
        a22=float(arr[1, 1]),
        form=form,
    )


def validate_marker_sets(
    mg1, mg2, k_min: float, k_max: float, epsilon: float, n_genes: int
) -> MarkerSets:
    """Check marker index sets: in range, disjoint, with ordered ratios."""
    set1 = tuple(sorted(int(i) for i in mg1))
    set2 = tuple(sorted(int(i) for i in mg2))
    for name, idx in (("mg1", set1), ("mg2", set2)):
        for i in idx:
            if not 0 <= i < n_genes:
                raise InvalidMarkerSets(
                    f"{name} index {i} outside 0..{n_genes - 1}"
                )
    shared = set(set1) & set(set2)
    if shared:
        raise InvalidMarkerSets(
            f"marker sets overlap at rows {sorted(shared)}"
        )
    if np.isnan(k_min) or np.isnan(k_max) or k_min > k_max:
        raise InvalidMarkerSets(
            f"ratio bounds out of order: k_min={k_min!r}, k_max={k_max!r}"
        )
    if epsilon < 0:
        raise InvalidMarkerSets(f"epsilon must be >= 0, got {epsilon!r}")
    return MarkerSets(
        mg1=set1,
        mg2=set2,
        k_min=float(k_min),
        k_max=float(k_max),
        epsilon=float(epsilon),
    )
