"""Domain errors raised across the package.

Every error derives from SectormixError and carries its defining fields as
attributes, so callers (and the CLI) can emit a machine-readable record
without parsing messages. ValidationError marks failures of input
validation as opposed to failures of the estimation procedure itself.
"""

from __future__ import annotations

from typing import Any


class SectormixError(Exception):
    """Base class for all domain errors."""

    def record(self) -> dict[str, Any]:
        details = {
            k: v for k, v in vars(self).items() if not k.startswith("_")
        }
        return {"error": type(self).__name__, "message": str(self), **details}


class ValidationError(SectormixError):
    """Input data or matrix failed structural validation."""


class NegativeValue(ValidationError):
    def __init__(self, row: int, col: int, value: float):
        self.row = int(row)
        self.col = int(col)
        self.value = float(value)
        super().__init__(f"negative value {value!r} at row {row}, column {col}")


class NonFiniteValue(ValidationError):
    def __init__(self, row: int, col: int):
        self.row = int(row)
        self.col = int(col)
        super().__init__(f"non-finite value at row {row}, column {col}")


class DuplicateGeneId(ValidationError):
    def __init__(self, gene_id: str):
        self.gene_id = gene_id
        super().__init__(f"duplicate gene id {gene_id!r}")


class ShapeMismatch(ValidationError):
    def __init__(self, message: str):
        super().__init__(message)


class SingularMixing(ValidationError):
    def __init__(self, det: float):
        self.det = float(det)
        super().__init__(
            f"mixing columns are linearly dependent (det={det:.3e})"
        )


class NegativeEntry(ValidationError):
    def __init__(self, row: int, col: int, value: float):
        self.row = int(row)
        self.col = int(col)
        self.value = float(value)
        super().__init__(
            f"mixing entry at row {row}, column {col} is negative ({value!r})"
        )


class RowSumViolation(ValidationError):
    def __init__(self, row: int, total: float):
        self.row = int(row)
        self.total = float(total)
        super().__init__(
            f"proportion row {row} sums to {total!r}, expected 1"
        )


class InvalidMarkerSets(ValidationError):
    def __init__(self, message: str):
        super().__init__(message)


class AllZeroColumn(SectormixError):
    def __init__(self, col: int):
        self.col = int(col)
        super().__init__(f"column {col} has no usable signal to normalize")


class EmptyAfterFilter(SectormixError):
    def __init__(self, retained: int):
        self.retained = int(retained)
        super().__init__(
            f"only {retained} genes remain after filtering, need at least 2"
        )


class DegenerateSector(SectormixError):
    def __init__(self, k_min: float, k_max: float, message: str | None = None):
        self.k_min = float(k_min)
        self.k_max = float(k_max)
        super().__init__(
            message
            or f"ratio spread [{k_min!r}, {k_max!r}] is too narrow to "
            "separate two sources"
        )


class TooFewMarkers(SectormixError):
    def __init__(self, source: int, found: int, required: int):
        self.source = int(source)
        self.found = int(found)
        self.required = int(required)
        super().__init__(
            f"source {source}: found {found} marker genes, need {required}"
        )


class EmptyMarkerSet(SectormixError):
    def __init__(self, source: int):
        self.source = int(source)
        super().__init__(f"marker set for source {source} is empty")


class ZeroNormMarker(SectormixError):
    def __init__(self, index: int):
        self.index = int(index)
        super().__init__(f"marker gene at row {index} has zero norm")


class NegativeScale(SectormixError):
    def __init__(self, c1: float, c2: float):
        self.c1 = float(c1)
        self.c2 = float(c2)
        super().__init__(
            f"proportion scaling came out non-positive (c1={c1!r}, c2={c2!r}); "
            "estimated radii do not bracket the data"
        )


class ZeroProportion(SectormixError):
    def __init__(self, sample: int, source: int):
        self.sample = int(sample)
        self.source = int(source)
        super().__init__(
            f"mixing proportion for sample {sample}, source {source} is zero"
        )


class ZeroVariance(SectormixError):
    def __init__(self, which: str = "input"):
        self.which = which
        super().__init__(f"{which} has zero variance, correlation undefined")


class LengthMismatch(SectormixError):
    def __init__(self, len_a: int, len_b: int):
        self.len_a = int(len_a)
        self.len_b = int(len_b)
        super().__init__(f"length mismatch: {len_a} vs {len_b}")


class SingleClass(SectormixError):
    def __init__(self, label: int):
        self.label = int(label)
        super().__init__(
            f"labels contain only class {label}; ROC needs both classes"
        )


class ConfigInvalid(SectormixError):
    def __init__(self, message: str):
        super().__init__(message)


class ParseError(SectormixError):
    def __init__(self, path: str, message: str, line: int | None = None):
        self.path = str(path)
        self.line = line
        at = f" (line {line})" if line is not None else ""
        super().__init__(f"{path}{at}: {message}")


class IllConditionedWarning(UserWarning):
    """Mixing matrix is numerically invertible but badly conditioned."""
