"""End-to-end deconvolution: preprocess, detect, estimate, invert."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .deconvolve import (
    CONDITION_WARN_THRESHOLD,
    DeconvolutionResult,
    SampleSpecificProfiles,
    recover_sources,
    sample_specific_markers,
)
from .markers import (
    MarkerConfig,
    detect_markers,
    estimate_mixing,
    scale_to_proportions,
)
from .model import ExpressionMatrix, MarkerSets, MixingMatrix
from .preprocess import PreprocessConfig, PreprocessReport, preprocess


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """Every artifact of one deconvolution run.

    expression is the preprocessed (normalized, filtered) input the rest of
    the pipeline saw; de_scores holds its per-gene ratio x1/x2, the
    mixing-invariant differential-expression score, aligned with
    expression.gene_ids.
    """

    expression: ExpressionMatrix
    preprocess_report: PreprocessReport
    markers: MarkerSets
    mixing_raw: MixingMatrix
    mixing: MixingMatrix
    deconvolution: DeconvolutionResult
    sample_profiles: SampleSpecificProfiles
    de_scores: np.ndarray


def run_pipeline(
    X: ExpressionMatrix,
    preprocess_config: PreprocessConfig = PreprocessConfig(),
    marker_config: MarkerConfig = MarkerConfig(),
    clamp: bool = True,
    condition_threshold: float = CONDITION_WARN_THRESHOLD,
) -> PipelineResult:
    """Run the whole chain on one mixed dataset.

    Identical to calling the module operations in sequence: preprocess,
    detect_markers, estimate_mixing, scale_to_proportions,
    recover_sources, sample_specific_markers.
    """
    filtered, report = preprocess(X, preprocess_config)
    markers = detect_markers(filtered, marker_config)
    raw = estimate_mixing(filtered, markers, preprocess_config.norm_kind)
    mixing = scale_to_proportions(raw)
    result = recover_sources(
        filtered, mixing, clamp=clamp, condition_threshold=condition_threshold
    )
    profiles = sample_specific_markers(filtered, mixing, markers)
    x1 = filtered.values[:, 0]
    x2 = filtered.values[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        de_scores = x1 / x2
    de_scores[x2 == 0] = np.inf
    de_scores.setflags(write=False)
    return PipelineResult(
        expression=filtered,
        preprocess_report=report,
        markers=markers,
        mixing_raw=raw,
        mixing=mixing,
        deconvolution=result,
        sample_profiles=profiles,
        de_scores=de_scores,
    )
