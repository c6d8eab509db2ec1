"""Delimited-text and JSON serialization for the command-line tools.

Files are written atomically (temp file, then rename) and all float
formatting goes through repr, so identical inputs always produce
byte-identical outputs.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from typing import Any

import numpy as np

from .analyze import EvaluationReport, evaluate_deconvolution
from .errors import ParseError
from .model import (
    ExpressionMatrix,
    MixingMatrix,
    validate_expression_matrix,
    validate_mixing_matrix,
)
from .pipeline import PipelineResult
from .synth import SynthDataset

TRUTH_FORMAT = "sectormix-truth-v1"
RESULT_FORMAT = "sectormix-result-v1"
EVALUATION_FORMAT = "sectormix-evaluation-v1"

_HEADERS = {
    ("gene_id", "sample1", "sample2"): "samples",
    ("gene_id", "tissue1", "tissue2"): "tissues",
}


def _fmt(v: float) -> str:
    return repr(float(v))


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, payload: dict) -> None:
    _atomic_write_text(
        path, json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(path, f"invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ParseError(path, "expected a JSON object at the top level")
    return payload


def sniff_delimiter(header_line: str, path: str) -> str:
    if "\t" in header_line:
        return "\t"
    if "," in header_line:
        return ","
    raise ParseError(path, "could not detect a tab or comma delimiter", line=1)


def read_expression(path: str) -> ExpressionMatrix:
    """Parse a delimited gene_id/sample1/sample2 table.

    Tab or comma delimited, detected from the header. A tissue1/tissue2
    header is accepted too (pure-profile tables round-trip through the
    same reader) and sets axis_kind accordingly.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(path, "file is empty")
    delim = sniff_delimiter(lines[0], path)
    header = tuple(h.strip() for h in lines[0].split(delim))
    if header not in _HEADERS:
        raise ParseError(
            path,
            "expected header gene_id/sample1/sample2 or "
            f"gene_id/tissue1/tissue2, got {list(header)}",
            line=1,
        )
    gene_ids = []
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(delim)
        if len(parts) != 3:
            raise ParseError(
                path, f"expected 3 fields, got {len(parts)}", line=lineno
            )
        gene_ids.append(parts[0].strip())
        try:
            rows.append((float(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise ParseError(
                path, f"could not parse value: {exc}", line=lineno
            ) from exc
    if not rows:
        raise ParseError(path, "no data rows found")
    return validate_expression_matrix(
        gene_ids, rows, axis_kind=_HEADERS[header]
    )


def write_expression(path: str, X: ExpressionMatrix) -> None:
    names = ("sample1", "sample2") if X.axis_kind == "samples" else (
        "tissue1",
        "tissue2",
    )
    out = ["\t".join(("gene_id",) + names)]
    for g, row in zip(X.gene_ids, X.values):
        out.append(f"{g}\t{_fmt(row[0])}\t{_fmt(row[1])}")
    _atomic_write_text(path, "\n".join(out) + "\n")


@dataclass(frozen=True, eq=False)
class TruthBundle:
    """Ground truth keyed by gene id, as stored in a truth sidecar."""

    mixing: MixingMatrix
    sources_by_id: dict[str, tuple[float, float]]
    mg1_ids: tuple[str, ...]
    mg2_ids: tuple[str, ...]
    de_by_id: dict[str, int] | None


def truth_from_dataset(dataset: SynthDataset) -> TruthBundle:
    ids = dataset.sources.gene_ids
    return TruthBundle(
        mixing=dataset.true_mixing,
        sources_by_id={
            g: (float(v[0]), float(v[1]))
            for g, v in zip(ids, dataset.sources.values)
        },
        mg1_ids=tuple(ids[i] for i in dataset.true_markers.mg1),
        mg2_ids=tuple(ids[i] for i in dataset.true_markers.mg2),
        de_by_id={
            g: int(d) for g, d in zip(ids, dataset.true_de_labels)
        },
    )


def write_truth(path: str, truth: TruthBundle) -> None:
    genes: dict[str, dict] = {}
    for g, (t1, t2) in truth.sources_by_id.items():
        entry: dict[str, Any] = {"tissue1": t1, "tissue2": t2}
        if truth.de_by_id is not None and g in truth.de_by_id:
            entry["de"] = truth.de_by_id[g]
        genes[g] = entry
    write_json(
        path,
        {
            "format": TRUTH_FORMAT,
            "mixing": {
                "entries": truth.mixing.matrix.tolist(),
                "form": truth.mixing.form,
            },
            "markers": {
                "tissue1": sorted(truth.mg1_ids),
                "tissue2": sorted(truth.mg2_ids),
            },
            "genes": genes,
        },
    )


def read_truth(path: str) -> TruthBundle:
    payload = _read_json(path)
    if payload.get("format") != TRUTH_FORMAT:
        raise ParseError(
            path, f"not a truth sidecar (format={payload.get('format')!r})"
        )
    try:
        mixing = validate_mixing_matrix(
            payload["mixing"]["entries"], payload["mixing"]["form"]
        )
        genes = payload["genes"]
        sources = {
            g: (float(e["tissue1"]), float(e["tissue2"]))
            for g, e in genes.items()
        }
        de = {g: int(e["de"]) for g, e in genes.items() if "de" in e}
        markers = payload["markers"]
        bundle = TruthBundle(
            mixing=mixing,
            sources_by_id=sources,
            mg1_ids=tuple(markers["tissue1"]),
            mg2_ids=tuple(markers["tissue2"]),
            de_by_id=de if de else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(path, f"malformed truth sidecar: {exc}") from exc
    return bundle


@dataclass(frozen=True, eq=False)
class LoadedResult:
    """A deconvolution result as stored in (or destined for) result.json."""

    mixing: MixingMatrix
    raw_mixing: MixingMatrix
    sources_by_id: dict[str, tuple[float, float]]
    mg1_ids: tuple[str, ...]
    mg2_ids: tuple[str, ...]
    de_scores_by_id: dict[str, float]
    diagnostics: dict[str, Any]
    config: dict[str, Any]


def build_result_payload(
    result: PipelineResult,
    config: dict[str, Any],
    e1_vs_truth: float | None = None,
) -> dict:
    """Serialize a pipeline run into the result.json structure."""
    ids = result.expression.gene_ids
    report = result.preprocess_report
    decon = result.deconvolution
    diagnostics: dict[str, Any] = {
        "condition_number": decon.condition_number,
        "negative_count": decon.negative_count,
        "clamped": decon.clamped,
        "scale_factors": list(report.scale_factors),
        "removed_low": len(report.removed_low),
        "removed_outlier": len(report.removed_outlier),
        "retained_count": report.retained_count,
        "delta_used": report.delta_used,
        "gamma_used": report.gamma_used,
    }
    if e1_vs_truth is not None:
        diagnostics["e1_vs_truth"] = e1_vs_truth
    sample_specific: dict[str, dict[str, dict[str, float]]] = {}
    for j, tissue in ((0, "tissue1"), (1, "tissue2")):
        per_sample = {}
        for k, sample in ((0, "sample1"), (1, "sample2")):
            per_sample[sample] = {
                ids[i]: v
                for i, v in result.sample_profiles.profiles[(j, k)]
            }
        sample_specific[tissue] = per_sample
    return {
        "format": RESULT_FORMAT,
        "config": config,
        "proportions": result.mixing.matrix.tolist(),
        "raw_mixing": result.mixing_raw.matrix.tolist(),
        "markers": {
            "tissue1": sorted(ids[i] for i in result.markers.mg1),
            "tissue2": sorted(ids[i] for i in result.markers.mg2),
            "k_min": result.markers.k_min,
            "k_max": result.markers.k_max,
            "epsilon": result.markers.epsilon,
        },
        "diagnostics": diagnostics,
        "de_scores": {
            g: float(s) for g, s in zip(ids, result.de_scores)
        },
        "sample_specific": sample_specific,
        "sources": {
            g: [float(v[0]), float(v[1])]
            for g, v in zip(ids, result.deconvolution.sources.values)
        },
    }


def loaded_result_from_payload(payload: dict, path: str = "<memory>") -> LoadedResult:
    if payload.get("format") != RESULT_FORMAT:
        raise ParseError(
            path, f"not a result file (format={payload.get('format')!r})"
        )
    try:
        return LoadedResult(
            mixing=validate_mixing_matrix(
                payload["proportions"], form="proportion"
            ),
            raw_mixing=validate_mixing_matrix(
                payload["raw_mixing"], form="raw"
            ),
            sources_by_id={
                g: (float(v[0]), float(v[1]))
                for g, v in payload["sources"].items()
            },
            mg1_ids=tuple(payload["markers"]["tissue1"]),
            mg2_ids=tuple(payload["markers"]["tissue2"]),
            de_scores_by_id={
                g: float(s) for g, s in payload["de_scores"].items()
            },
            diagnostics=dict(payload["diagnostics"]),
            config=dict(payload.get("config", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(path, f"malformed result file: {exc}") from exc


def read_result(path: str) -> LoadedResult:
    return loaded_result_from_payload(_read_json(path), path)


def evaluate_against_truth(
    loaded: LoadedResult, truth: TruthBundle
) -> EvaluationReport:
    """Align a stored result with a truth bundle and score it.

    Genes are matched by id (the result usually covers a filtered subset);
    AUC is reported only when the truth carries DE labels for every
    matched gene.
    """
    common = [g for g in loaded.sources_by_id if g in truth.sources_by_id]
    est = np.array([loaded.sources_by_id[g] for g in common])
    true = np.array([truth.sources_by_id[g] for g in common])
    marker_union = set(truth.mg1_ids) | set(truth.mg2_ids)
    marker_mask = np.array([g in marker_union for g in common])
    mixed_scores = np.array([loaded.de_scores_by_id[g] for g in common])
    with np.errstate(divide="ignore", invalid="ignore"):
        pure_scores = true[:, 0] / true[:, 1]
    pure_scores[true[:, 1] == 0] = np.inf
    labels = None
    if truth.de_by_id is not None and all(g in truth.de_by_id for g in common):
        labels = np.array([truth.de_by_id[g] for g in common])
    return evaluate_deconvolution(
        est_mixing=loaded.mixing,
        true_mixing=truth.mixing,
        est_sources=est,
        true_sources=true,
        marker_mask=marker_mask,
        detected_marker_ids=set(loaded.mg1_ids) | set(loaded.mg2_ids),
        true_marker_ids=marker_union,
        mixed_de_scores=mixed_scores,
        pure_de_scores=pure_scores,
        true_de_labels=labels,
    )


def evaluation_payload(report: EvaluationReport, config: dict) -> dict:
    return {
        "format": EVALUATION_FORMAT,
        "config": config,
        "metrics": {
            "e1": report.e1,
            "pearson_markers": report.pearson_markers,
            "pearson_all": report.pearson_all,
            "spearman_rank": report.spearman_rank,
            "venn": {
                "only_detected": report.venn[0],
                "both": report.venn[1],
                "only_reference": report.venn[2],
            },
            "auc": report.auc,
        },
    }


def write_evaluation_tsv(path: str, report: EvaluationReport) -> None:
    rows = [
        ("e1", _fmt(report.e1)),
        ("pearson_markers", _fmt(report.pearson_markers)),
        ("pearson_all", _fmt(report.pearson_all)),
        ("spearman_rank", _fmt(report.spearman_rank)),
        ("venn_only_detected", str(report.venn[0])),
        ("venn_both", str(report.venn[1])),
        ("venn_only_reference", str(report.venn[2])),
        ("auc", "NA" if report.auc is None else _fmt(report.auc)),
    ]
    text = "\n".join(["metric\tvalue"] + [f"{k}\t{v}" for k, v in rows])
    _atomic_write_text(path, text + "\n")
