"""Signal normalization and gene filtering ahead of marker detection."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import AllZeroColumn, ConfigInvalid, EmptyAfterFilter
from .model import ExpressionMatrix

NORM_METHODS = ("mean", "mode", "none")
NORM_KINDS = ("l1", "l2")

# Data-driven threshold defaults: quantiles of the per-gene norms.
DELTA_QUANTILE = 0.02
GAMMA_QUANTILE = 0.998


@dataclass(frozen=True)
class PreprocessConfig:
    """Normalization method plus intensity-filter thresholds.

    delta and gamma bound the per-gene norm; when left as None they are
    resolved per dataset from the DELTA_QUANTILE / GAMMA_QUANTILE quantiles
    of the observed norms.
    """

    norm_method: str = "mean"
    delta: float | None = None
    gamma: float | None = None
    norm_kind: str = "l2"
    mode_bins: int = 64

    def __post_init__(self):
        if self.norm_method not in NORM_METHODS:
            raise ConfigInvalid(
                f"norm_method must be one of {NORM_METHODS}, "
                f"got {self.norm_method!r}"
            )
        if self.norm_kind not in NORM_KINDS:
            raise ConfigInvalid(
                f"norm_kind must be one of {NORM_KINDS}, got {self.norm_kind!r}"
            )
        if self.mode_bins < 8:
            raise ConfigInvalid(f"mode_bins must be >= 8, got {self.mode_bins}")
        if self.delta is not None and self.delta <= 0:
            raise ConfigInvalid(f"delta must be > 0, got {self.delta!r}")
        if (
            self.delta is not None
            and self.gamma is not None
            and self.gamma <= self.delta
        ):
            raise ConfigInvalid(
                f"gamma must exceed delta, got delta={self.delta!r} "
                f"gamma={self.gamma!r}"
            )


@dataclass(frozen=True)
class PreprocessReport:
    """What preprocessing did: scale factors, removals, effective bounds."""

    scale_factors: tuple[float, float]
    removed_low: tuple[int, ...]
    removed_outlier: tuple[int, ...]
    retained_count: int
    delta_used: float
    gamma_used: float


def gene_norms(values: np.ndarray, norm_kind: str = "l2") -> np.ndarray:
    if norm_kind == "l1":
        return np.abs(values).sum(axis=1)
    if norm_kind == "l2":
        return np.sqrt((values * values).sum(axis=1))
    raise ConfigInvalid(f"norm_kind must be one of {NORM_KINDS}, got {norm_kind!r}")


def _column_mode(col: np.ndarray, bins: int, which: int) -> float:
    pos = col[col > 0]
    if pos.size == 0:
        raise AllZeroColumn(which)
    lo = float(pos.min())
    hi = float(pos.max())
    if lo == hi:
        return lo
    counts, edges = np.histogram(pos, bins=bins, range=(lo, hi))
    b = int(np.argmax(counts))
    return float((edges[b] + edges[b + 1]) / 2.0)


def normalize_samples(
    X: ExpressionMatrix, method: str = "mean", mode_bins: int = 64
) -> tuple[ExpressionMatrix, tuple[float, float]]:
    """Rescale each column onto a common intensity level.

    "mean" equalizes the column sums and "mode" the histogram mode of each
    column's positive values; both rescale onto the mean of the two
    per-column statistics so the overall intensity scale is preserved.
    "none" returns the input with unit factors.
    """
    if method not in NORM_METHODS:
        raise ConfigInvalid(
            f"norm_method must be one of {NORM_METHODS}, got {method!r}"
        )
    if method == "none":
        return X, (1.0, 1.0)
    if method == "mean":
        stats = X.values.sum(axis=0)
        for k in (0, 1):
            if stats[k] == 0:
                raise AllZeroColumn(k)
    else:
        stats = np.array(
            [_column_mode(X.values[:, k], mode_bins, k) for k in (0, 1)]
        )
    target = float(stats.mean())
    factors = (target / stats[0], target / stats[1])
    scaled = X.values * np.asarray(factors)
    scaled.setflags(write=False)
    return (
        ExpressionMatrix(X.gene_ids, scaled, X.axis_kind),
        (float(factors[0]), float(factors[1])),
    )


def filter_genes(
    X: ExpressionMatrix,
    delta: float | None = None,
    gamma: float | None = None,
    norm_kind: str = "l2",
) -> tuple[ExpressionMatrix, PreprocessReport]:
    """Drop genes whose norm falls outside [delta, gamma].

    Genes below delta carry too little signal to place reliably in the
    scatter; genes above gamma are treated as outliers. Row order of the
    retained genes is preserved.
    """
    norms = gene_norms(X.values, norm_kind)
    if delta is None:
        delta = float(np.quantile(norms, DELTA_QUANTILE))
    if gamma is None:
        gamma = float(np.quantile(norms, GAMMA_QUANTILE))
    if delta > gamma:
        raise ConfigInvalid(
            f"delta={delta!r} exceeds gamma={gamma!r} after resolution"
        )
    low = norms < delta
    high = norms > gamma
    keep = ~(low | high)
    retained = int(keep.sum())
    if retained < 2:
        raise EmptyAfterFilter(retained)
    kept_values = X.values[keep].copy()
    kept_values.setflags(write=False)
    kept_ids = tuple(g for g, k in zip(X.gene_ids, keep) if k)
    report = PreprocessReport(
        scale_factors=(1.0, 1.0),
        removed_low=tuple(int(i) for i in np.flatnonzero(low)),
        removed_outlier=tuple(int(i) for i in np.flatnonzero(high)),
        retained_count=retained,
        delta_used=float(delta),
        gamma_used=float(gamma),
    )
    return ExpressionMatrix(kept_ids, kept_values, X.axis_kind), report


def preprocess(
    X: ExpressionMatrix, config: PreprocessConfig = PreprocessConfig()
) -> tuple[ExpressionMatrix, PreprocessReport]:
    """Normalize then filter, merging both steps into one report."""
    normalized, factors = normalize_samples(
        X, config.norm_method, config.mode_bins
    )
    filtered, report = filter_genes(
        normalized, config.delta, config.gamma, config.norm_kind
    )
    return filtered, replace(report, scale_factors=factors)
