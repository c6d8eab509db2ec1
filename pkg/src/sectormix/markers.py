"""Marker-gene detection and mixing-matrix estimation.

The two columns of a mixed dataset place every gene at a point (x1, x2);
with two sources all points fall inside a sector whose bounding rays are
the columns of the mixing matrix. Genes expressed by only one source sit
exactly on a ray, so the extremes of the per-gene ratio r = x2/x1 identify
them, and averaging their standardized coordinates recovers the rays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigInvalid,
    DegenerateSector,
    EmptyMarkerSet,
    NegativeScale,
    SingularMixing,
    TooFewMarkers,
    ZeroNormMarker,
)
from .model import (
    ExpressionMatrix,
    MarkerSets,
    MixingMatrix,
    validate_marker_sets,
    validate_mixing_matrix,
)
from .preprocess import gene_norms

EPSILON_MODES = ("absolute", "relative")

# Two sources are indistinguishable below this ratio spread.
MIN_SECTOR_SPREAD = 1e-6


@dataclass(frozen=True)
class MarkerConfig:
    """Tolerance for the ratio bands that select marker genes.

    epsilon widens the band anchored at each ratio extreme; in "relative"
    mode the width scales with the extreme itself, in "absolute" mode it is
    used as-is. min_markers_per_source rejects detections too thin to
    average.
    """

    epsilon: float = 0.01
    epsilon_mode: str = "relative"
    min_markers_per_source: int = 1

    def __post_init__(self):
        if self.epsilon < 0:
            raise ConfigInvalid(f"epsilon must be >= 0, got {self.epsilon!r}")
        if self.epsilon_mode not in EPSILON_MODES:
            raise ConfigInvalid(
                f"epsilon_mode must be one of {EPSILON_MODES}, "
                f"got {self.epsilon_mode!r}"
            )
        if self.min_markers_per_source < 1:
            raise ConfigInvalid(
                "min_markers_per_source must be >= 1, "
                f"got {self.min_markers_per_source}"
            )


@dataclass(frozen=True, eq=False)
class GeneRatios:
    """Per-gene ratio x2/x1, order preserved.

    Genes with x1 == 0 get ratio +inf and are flagged in zero_denominator
    rather than dropped.
    """

    ratios: np.ndarray
    zero_denominator: np.ndarray


def gene_ratios(X: ExpressionMatrix) -> GeneRatios:
    x1 = X.values[:, 0]
    x2 = X.values[:, 1]
    flagged = x1 == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        r = x2 / x1
    r[flagged] = np.inf
    r.setflags(write=False)
    flagged.setflags(write=False)
    return GeneRatios(ratios=r, zero_denominator=flagged)


def detect_markers(
    X: ExpressionMatrix, config: MarkerConfig = MarkerConfig()
) -> MarkerSets:
    """Select the genes whose ratios sit at the two sector extremes.

    MG2 genes have r = x2/x1 within epsilon of the largest finite ratio
    k_max. MG1 genes are found on the inverted axis: their ratio x1/x2 lies
    within epsilon of 1/k_min, the largest value of x1/x2. Genes with an
    infinite ratio are excluded from both bands.
    """
    ratios = gene_ratios(X)
    r = ratios.ratios
    finite = np.isfinite(r)
    if int(finite.sum()) < 2:
        raise DegenerateSector(
            np.nan, np.nan, "fewer than 2 genes with a finite ratio"
        )
    k_min = float(r[finite].min())
    k_max = float(r[finite].max())
    if k_max - k_min < MIN_SECTOR_SPREAD:
        raise DegenerateSector(k_min, k_max)

    eps = config.epsilon
    if config.epsilon_mode == "relative":
        in_mg2 = finite & (r >= k_max * (1.0 - eps))
        in_mg1 = finite & (r <= k_min * (1.0 + eps))
    else:
        # The lower extreme is banded on the inverted ratio x1/x2, so the
        # same absolute epsilon acts symmetrically on both sources.
        with np.errstate(divide="ignore"):
            q = np.where(r > 0, 1.0 / r, np.inf)
            q_max = np.inf if k_min == 0 else 1.0 / k_min
        in_mg2 = finite & (r >= k_max - eps)
        in_mg1 = finite & (q >= q_max - eps)

    mg1 = np.flatnonzero(in_mg1)
    mg2 = np.flatnonzero(in_mg2)
    required = config.min_markers_per_source
    if len(mg1) < required:
        raise TooFewMarkers(1, len(mg1), required)
    if len(mg2) < required:
        raise TooFewMarkers(2, len(mg2), required)
    return validate_marker_sets(
        mg1, mg2, k_min, k_max, eps, X.n_genes
    )


def estimate_mixing(
    X: ExpressionMatrix, markers: MarkerSets, norm_kind: str = "l2"
) -> MixingMatrix:
    """Average the standardized marker coordinates into mixing columns.

    Each marker gene's (x1, x2) is divided by its norm so every marker
    contributes a direction, not a magnitude; the per-set means are the two
    estimated rays, returned as the columns of a raw-form MixingMatrix.
    """
    columns = []
    for source, idx in ((1, markers.mg1), (2, markers.mg2)):
        if len(idx) == 0:
            raise EmptyMarkerSet(source)
        rows = X.values[list(idx)]
        norms = gene_norms(rows, norm_kind)
        zero = norms == 0
        if zero.any():
            raise ZeroNormMarker(idx[int(np.flatnonzero(zero)[0])])
        columns.append((rows / norms[:, None]).mean(axis=0))
    a1, a2 = columns
    return validate_mixing_matrix(
        ((a1[0], a2[0]), (a1[1], a2[1])), form="raw"
    )


def scale_to_proportions(A: MixingMatrix) -> MixingMatrix:
    """Rescale the columns so that each row sums to 1.

    Solves A @ (c1, c2) = (1, 1) and multiplies column j by c_j; the scaled
    entries are then per-sample source proportions. Raises NegativeScale
    when the solution is not strictly positive, which happens when the
    estimated rays fail to bracket the bulk of the data.
    """
    det = A.det
    scale = float(np.hypot(A.a11, A.a21) * np.hypot(A.a12, A.a22))
    if abs(det) <= 1e-8 * scale:
        raise SingularMixing(det)
    c1 = (A.a22 - A.a12) / det
    c2 = (A.a11 - A.a21) / det
    if c1 <= 0 or c2 <= 0:
        raise NegativeScale(c1, c2)
    return validate_mixing_matrix(
        ((A.a11 * c1, A.a12 * c2), (A.a21 * c1, A.a22 * c2)),
        form="proportion",
    )


def sector_bounds(A: MixingMatrix) -> tuple[float, float]:
    """Bounds of the per-gene ratio x1/x2 implied by the mixing columns.

    Every non-negative combination of the columns has x1/x2 between
    a12/a22 and a11/a21; the pair is returned ordered (lo, hi), with
    infinite bounds where a column lies on an axis.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        b1 = np.divide(A.a11, A.a21)
        b2 = np.divide(A.a12, A.a22)
    bounds = sorted(float(b) for b in (b1, b2))
    return bounds[0], bounds[1]
