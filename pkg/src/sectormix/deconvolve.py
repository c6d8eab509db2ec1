"""Source recovery: invert the mixing and read off per-sample profiles."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import IllConditionedWarning, SingularMixing, ZeroProportion
from .model import ExpressionMatrix, MarkerSets, MixingMatrix

# Condition numbers above this trigger IllConditionedWarning.
CONDITION_WARN_THRESHOLD = 1e6


@dataclass(frozen=True)
class DeconvolutionResult:
    """Recovered sources plus the numerical diagnostics of the inversion.

    sources has axis_kind "tissues". When clamped is False the values may
    contain small negative artifacts from noise amplification;
    negative_count reports how many entries were negative before any
    clamping.
    """

    mixing: MixingMatrix
    sources: ExpressionMatrix
    condition_number: float
    negative_count: int
    clamped: bool


@dataclass(frozen=True, eq=False)
class SampleSpecificProfiles:
    """Per-sample source expression at the marker genes.

    profiles maps (source j, sample k), both 0-based, to a tuple of
    (gene row, value) pairs covering that source's marker set. For marker
    genes the mixed signal is a_kj times the source profile as seen in
    sample k, so the division x_k / a_kj is exact rather than estimated.
    """

    profiles: Mapping[tuple[int, int], tuple[tuple[int, float], ...]]

    def marker_rows(self, source: int) -> tuple[int, ...]:
        return tuple(i for i, _ in self.profiles[(source, 0)])

    def values_for(self, source: int, sample: int) -> np.ndarray:
        return np.array([v for _, v in self.profiles[(source, sample)]])

    def cross_sample_mean(self, source: int) -> np.ndarray:
        stacked = np.stack(
            [self.values_for(source, k) for k in (0, 1)]
        )
        return stacked.mean(axis=0)

    def deviations(self, source: int, sample: int) -> np.ndarray:
        """Per-marker deviation of one sample from the cross-sample mean."""
        return self.values_for(source, sample) - self.cross_sample_mean(source)


def invert_mixing(
    A: MixingMatrix, condition_threshold: float = CONDITION_WARN_THRESHOLD
) -> tuple[np.ndarray, float]:
    """Closed-form 2x2 inverse and its condition number.

    The condition number is the ratio of the singular values; above
    condition_threshold an IllConditionedWarning is emitted (the inverse is
    still returned).
    """
    det = A.det
    scale = float(np.hypot(A.a11, A.a21) * np.hypot(A.a12, A.a22))
    if abs(det) <= 1e-8 * scale:
        raise SingularMixing(det)
    inv = (
        np.array([[A.a22, -A.a12], [-A.a21, A.a11]]) / det
    )
    # Singular values from the 2x2 Gram trace/determinant identities.
    t = A.a11**2 + A.a12**2 + A.a21**2 + A.a22**2
    disc = max(t * t - 4.0 * det * det, 0.0)
    root = np.sqrt(disc)
    s_max = np.sqrt((t + root) / 2.0)
    s_min = np.sqrt(max((t - root) / 2.0, 0.0))
    cond = float("inf") if s_min == 0 else float(s_max / s_min)
    if cond > condition_threshold:
        warnings.warn(
            IllConditionedWarning(
                f"mixing condition number {cond:.3e} exceeds "
                f"{condition_threshold:.1e}; recovered sources amplify noise"
            ),
            stacklevel=2,
        )
    return inv, cond


def recover_sources(
    X: ExpressionMatrix,
    A: MixingMatrix,
    clamp: bool = False,
    condition_threshold: float = CONDITION_WARN_THRESHOLD,
) -> DeconvolutionResult:
    """Apply the inverse mixing to every gene.

    With clamp=True negative entries are set to 0 after counting them;
    with clamp=False they are kept, so the returned sources matrix can
    step outside the validated non-negative domain.
    """
    inv, cond = invert_mixing(A, condition_threshold)
    est = X.values @ inv.T
    negative = est < 0
    count = int(negative.sum())
    if clamp:
        est[negative] = 0.0
    est.setflags(write=False)
    sources = ExpressionMatrix(X.gene_ids, est, axis_kind="tissues")
    return DeconvolutionResult(
        mixing=A,
        sources=sources,
        condition_number=cond,
        negative_count=count,
        clamped=clamp,
    )


def sample_specific_markers(
    X: ExpressionMatrix, A: MixingMatrix, markers: MarkerSets
) -> SampleSpecificProfiles:
    """Divide each marker's mixed value by its sample's proportion.

    A must be in proportion form so the divisors are the per-sample source
    fractions. Gives one profile value per (source, sample, marker gene).
    A zero proportion raises ZeroProportion, except when every observed
    marker value in that sample is also zero (a source entirely absent
    from a sample, as under identity mixing), where the profile is 0.
    """
    if A.form != "proportion":
        raise ValueError("sample_specific_markers needs a proportion-form matrix")
    mat = A.matrix
    profiles: dict[tuple[int, int], tuple[tuple[int, float], ...]] = {}
    for j, idx in ((0, markers.mg1), (1, markers.mg2)):
        for k in (0, 1):
            a_kj = mat[k, j]
            if a_kj == 0:
                if np.any(X.values[list(idx), k] != 0):
                    # 1-based, matching the a_kj subscripts in the message.
                    raise ZeroProportion(k + 1, j + 1)
                profiles[(j, k)] = tuple((int(i), 0.0) for i in idx)
                continue
            vals = X.values[list(idx), k] / a_kj
            profiles[(j, k)] = tuple(
                (int(i), float(v)) for i, v in zip(idx, vals)
            )
    return SampleSpecificProfiles(profiles=profiles)
