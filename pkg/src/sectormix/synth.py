"""Seeded synthetic two-source datasets with planted markers and truth."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analyze import de_truth_labels
from .errors import ConfigInvalid
from .model import (
    ExpressionMatrix,
    MarkerSets,
    MixingMatrix,
    validate_expression_matrix,
    validate_marker_sets,
    validate_mixing_matrix,
)


@dataclass(frozen=True)
class Lognormal:
    """Lognormal expression law; exp of Normal(mu, sigma)."""

    mu: float = 2.0
    sigma: float = 1.0


@dataclass(frozen=True)
class Uniform:
    """Uniform expression law on [lo, hi)."""

    lo: float = 1.0
    hi: float = 100.0


ExpressionLaw = Lognormal | Uniform


def _table_22_mixing() -> MixingMatrix:
    return validate_mixing_matrix(
        ((0.75, 0.25), (0.25, 0.75)), form="proportion"
    )


@dataclass(frozen=True)
class SynthConfig:
    """Everything that determines one synthetic dataset.

    Marker rows carry an off-source value of exactly marker_leak times the
    on-source value (0 gives exact markers). noise_sigma applies
    multiplicative lognormal noise with median 1 to the mixed matrix.
    sample_dev_sigma adds per-sample deviations to the marker genes'
    on-source values, centered to mean zero within each marker set.
    """

    n_genes: int = 2000
    n_mg1: int = 5
    n_mg2: int = 5
    mixing: MixingMatrix = field(default_factory=_table_22_mixing)
    law: ExpressionLaw = field(default_factory=Lognormal)
    marker_leak: float = 0.0
    noise_sigma: float = 0.0
    sample_dev_sigma: float = 0.0
    de_fold_change: float = 2.0
    seed: int = 0


@dataclass(frozen=True, eq=False)
class SynthDataset:
    """Generated mixed data plus every piece of ground truth behind it.

    true_markers.mg1/mg2 hold the planted rows for source 1 and source 2;
    k_min/k_max are the ray ratios x2/x1 implied by true_mixing.
    true_sample_deviations maps (source, sample) to the centered deviation
    vector aligned with that source's marker rows (None when disabled).
    """

    sources: ExpressionMatrix
    mixed: ExpressionMatrix
    true_mixing: MixingMatrix
    true_markers: MarkerSets
    true_de_labels: np.ndarray
    true_sample_deviations: dict[tuple[int, int], np.ndarray] | None


def _validate_config(cfg: SynthConfig) -> None:
    if cfg.n_genes < 2:
        raise ConfigInvalid(f"n_genes must be >= 2, got {cfg.n_genes}")
    if cfg.n_mg1 < 1 or cfg.n_mg2 < 1:
        raise ConfigInvalid(
            f"need at least one marker per source, got "
            f"{cfg.n_mg1} and {cfg.n_mg2}"
        )
    if cfg.n_mg1 + cfg.n_mg2 > cfg.n_genes:
        raise ConfigInvalid(
            f"{cfg.n_mg1}+{cfg.n_mg2} marker genes do not fit in "
            f"{cfg.n_genes} rows"
        )
    if cfg.mixing.form != "proportion":
        raise ConfigInvalid("mixing must be in proportion form")
    if cfg.marker_leak < 0:
        raise ConfigInvalid(f"marker_leak must be >= 0, got {cfg.marker_leak!r}")
    if cfg.noise_sigma < 0:
        raise ConfigInvalid(f"noise_sigma must be >= 0, got {cfg.noise_sigma!r}")
    if cfg.sample_dev_sigma < 0:
        raise ConfigInvalid(
            f"sample_dev_sigma must be >= 0, got {cfg.sample_dev_sigma!r}"
        )
    if isinstance(cfg.law, Lognormal):
        if cfg.law.sigma < 0:
            raise ConfigInvalid(f"law sigma must be >= 0, got {cfg.law.sigma!r}")
    elif isinstance(cfg.law, Uniform):
        if cfg.law.lo < 0 or cfg.law.hi <= cfg.law.lo:
            raise ConfigInvalid(
                f"uniform law needs 0 <= lo < hi, got [{cfg.law.lo!r}, "
                f"{cfg.law.hi!r})"
            )
    else:
        raise ConfigInvalid(f"unknown expression law {cfg.law!r}")
    if cfg.de_fold_change <= 1:
        raise ConfigInvalid(
            f"de_fold_change must exceed 1, got {cfg.de_fold_change!r}"
        )


def _draw(law: ExpressionLaw, rng: np.random.Generator, size) -> np.ndarray:
    if isinstance(law, Lognormal):
        return rng.lognormal(law.mu, law.sigma, size)
    return rng.uniform(law.lo, law.hi, size)


def _centered_deviations(
    rng: np.random.Generator, sigma: float, base: np.ndarray
) -> np.ndarray:
    """Zero-mean deviations that never push base below 5% of itself.

    The shrink preserves the zero mean, so the cross-marker average of the
    per-sample profile error stays at 0 by construction.
    """
    d = rng.normal(0.0, sigma, base.size)
    d -= d.mean()
    dipping = d < 0
    if dipping.any():
        worst = float((-d[dipping] / base[dipping]).max())
        if worst > 0.95:
            d *= 0.95 / worst
    return d


def generate(config: SynthConfig = SynthConfig()) -> SynthDataset:
    """Build one dataset; the same config yields bit-identical output."""
    _validate_config(config)
    rng = np.random.default_rng(config.seed)
    n = config.n_genes
    n1, n2 = config.n_mg1, config.n_mg2

    placement = rng.permutation(n)
    mg1 = np.sort(placement[:n1])
    mg2 = np.sort(placement[n1 : n1 + n2])
    rest = np.sort(placement[n1 + n2 :])

    alphas = _draw(config.law, rng, n1)
    betas = _draw(config.law, rng, n2)
    leak = config.marker_leak
    S = np.zeros((n, 2))
    S[mg1, 0] = alphas
    S[mg1, 1] = leak * alphas
    S[mg2, 1] = betas
    S[mg2, 0] = leak * betas
    if rest.size:
        S[rest] = _draw(config.law, rng, (rest.size, 2))

    with np.errstate(divide="ignore", invalid="ignore"):
        pure_ratio = S[:, 0] / S[:, 1]
    labels = de_truth_labels(pure_ratio, config.de_fold_change)

    A = config.mixing.matrix
    mixed = S @ A.T

    deviations = None
    if config.sample_dev_sigma > 0:
        deviations = {}
        for j, idx, base in ((0, mg1, alphas), (1, mg2, betas)):
            for k in (0, 1):
                deviations[(j, k)] = _centered_deviations(
                    rng, config.sample_dev_sigma, base
                )
        for k in (0, 1):
            mixed[mg1, k] = A[k, 0] * (alphas + deviations[(0, k)]) + A[
                k, 1
            ] * (leak * alphas)
            mixed[mg2, k] = A[k, 0] * (leak * betas) + A[k, 1] * (
                betas + deviations[(1, k)]
            )

    if config.noise_sigma > 0:
        mixed *= np.exp(rng.normal(0.0, config.noise_sigma, (n, 2)))

    width = max(5, len(str(n - 1)))
    gene_ids = tuple(f"g{i:0{width}d}" for i in range(n))
    sources = validate_expression_matrix(gene_ids, S, axis_kind="tissues")
    mixed_matrix = validate_expression_matrix(
        gene_ids, mixed, axis_kind="samples"
    )

    with np.errstate(divide="ignore"):
        r1 = np.divide(A[1, 0], A[0, 0]) if A[0, 0] != 0 else np.inf
        r2 = np.divide(A[1, 1], A[0, 1]) if A[0, 1] != 0 else np.inf
    markers = validate_marker_sets(
        mg1, mg2, min(r1, r2), max(r1, r2), 0.0, n
    )
    labels.setflags(write=False)
    return SynthDataset(
        sources=sources,
        mixed=mixed_matrix,
        true_mixing=config.mixing,
        true_markers=markers,
        true_de_labels=labels,
        true_sample_deviations=deviations,
    )


def mix(
    S: ExpressionMatrix,
    A: MixingMatrix,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> ExpressionMatrix:
    """Mix pure profiles into observed samples, optionally with noise."""
    if noise_sigma < 0:
        raise ConfigInvalid(f"noise_sigma must be >= 0, got {noise_sigma!r}")
    values = S.values @ A.matrix.T
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        values *= np.exp(rng.normal(0.0, noise_sigma, values.shape))
    return validate_expression_matrix(S.gene_ids, values, axis_kind="samples")


def random_proportion_mixing(
    rng: np.random.Generator,
    min_entry: float = 0.05,
    min_separation: float = 0.1,
) -> MixingMatrix:
    """Draw a well-separated random proportion matrix.

    Rows are (p, 1-p) with both p drawn away from the simplex corners and
    from each other, which keeps the sector wide enough to detect.
    """
    if not 0 < min_entry < 0.5:
        raise ConfigInvalid(f"min_entry must be in (0, 0.5), got {min_entry!r}")
    while True:
        p1, p2 = rng.uniform(min_entry, 1.0 - min_entry, 2)
        if abs(p1 - p2) >= min_separation:
            break
    return validate_mixing_matrix(
        ((p1, 1.0 - p1), (p2, 1.0 - p2)), form="proportion"
    )
