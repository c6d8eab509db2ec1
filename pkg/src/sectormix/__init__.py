"""Blind two-source unmixing of non-negative expression profiles.

Two mixed profiles measured over the same genes are modeled as
non-negative combinations of two pure sources. Genes expressed by only
one source fall on the boundary rays of the scatter sector, which makes
the mixing matrix identifiable without any reference signatures. The
package detects those boundary genes, estimates the mixing proportions,
recovers the pure profiles, and scores estimates against known truth.
"""

from .analyze import (
    DERanking,
    EvaluationReport,
    de_rank,
    de_truth_labels,
    e1_error,
    evaluate_deconvolution,
    fold_change_scores,
    marker_overlap,
    pearson,
    resolve_permutation,
    roc_auc,
    spearman_rank,
)
from .deconvolve import (
    DeconvolutionResult,
    SampleSpecificProfiles,
    invert_mixing,
    recover_sources,
    sample_specific_markers,
)
from .errors import (
    ConfigInvalid,
    DegenerateSector,
    IllConditionedWarning,
    ParseError,
    SectormixError,
    SingularMixing,
    ValidationError,
)
from .markers import (
    GeneRatios,
    MarkerConfig,
    detect_markers,
    estimate_mixing,
    gene_ratios,
    scale_to_proportions,
    sector_bounds,
)
from .model import (
    ExpressionMatrix,
    MarkerSets,
    MixingMatrix,
    validate_expression_matrix,
    validate_marker_sets,
    validate_mixing_matrix,
)
from .pipeline import PipelineResult, run_pipeline
from .preprocess import PreprocessConfig, PreprocessReport, preprocess
from .synth import (
    Lognormal,
    SynthConfig,
    SynthDataset,
    Uniform,
    generate,
    mix,
    random_proportion_mixing,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigInvalid",
    "DERanking",
    "DeconvolutionResult",
    "DegenerateSector",
    "EvaluationReport",
    "ExpressionMatrix",
    "GeneRatios",
    "IllConditionedWarning",
    "Lognormal",
    "MarkerConfig",
    "MarkerSets",
    "MixingMatrix",
    "ParseError",
    "PipelineResult",
    "PreprocessConfig",
    "PreprocessReport",
    "SampleSpecificProfiles",
    "SectormixError",
    "SingularMixing",
    "SynthConfig",
    "SynthDataset",
    "Uniform",
    "ValidationError",
    "de_rank",
    "de_truth_labels",
    "detect_markers",
    "e1_error",
    "estimate_mixing",
    "evaluate_deconvolution",
    "fold_change_scores",
    "gene_ratios",
    "generate",
    "invert_mixing",
    "marker_overlap",
    "mix",
    "pearson",
    "preprocess",
    "random_proportion_mixing",
    "recover_sources",
    "resolve_permutation",
    "roc_auc",
    "run_pipeline",
    "sample_specific_markers",
    "scale_to_proportions",
    "sector_bounds",
    "spearman_rank",
    "validate_expression_matrix",
    "validate_marker_sets",
    "validate_mixing_matrix",
]
