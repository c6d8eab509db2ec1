import json
import os

import numpy as np
import pytest

from sectormix.analyze import EvaluationReport, e1_error
from sectormix.errors import ParseError
from sectormix.io import (
    build_result_payload,
    evaluate_against_truth,
    evaluation_payload,
    read_expression,
    read_result,
    read_truth,
    truth_from_dataset,
    write_evaluation_tsv,
    write_expression,
    write_json,
    write_truth,
)
from sectormix.markers import MarkerConfig
from sectormix.model import validate_expression_matrix
from sectormix.pipeline import run_pipeline
from sectormix.preprocess import PreprocessConfig
from sectormix.synth import SynthConfig, generate

OPEN_PREPROCESS = PreprocessConfig(
    norm_method="none", delta=1e-300, gamma=1e300
)
EXACT_MARKERS = MarkerConfig(epsilon=0.0)


def no_tmp_left(directory):
    return not any(n.endswith(".tmp") for n in os.listdir(directory))


class TestExpressionRoundTrip:
    def test_tsv_round_trip_is_exact(self, tmp_path):
        X = generate(SynthConfig(n_genes=40, seed=8, noise_sigma=0.2)).mixed
        path = str(tmp_path / "mixed.tsv")
        write_expression(path, X)
        back = read_expression(path)
        assert back.gene_ids == X.gene_ids
        assert np.array_equal(back.values, X.values)
        assert back.axis_kind == "samples"
        assert no_tmp_left(tmp_path)

    def test_awkward_floats_survive_repr(self, tmp_path):
        X = validate_expression_matrix(
            ("a", "b", "c"),
            [[0.1, 1 / 3], [1e-300, 1e300], [123456.789, 2**-40]],
        )
        path = str(tmp_path / "x.tsv")
        write_expression(path, X)
        assert np.array_equal(read_expression(path).values, X.values)

    def test_tissue_header_round_trip(self, tmp_path):
        S = generate(SynthConfig(n_genes=10, seed=0)).sources
        path = str(tmp_path / "sources.tsv")
        write_expression(path, S)
        back = read_expression(path)
        assert back.axis_kind == "tissues"
        assert np.array_equal(back.values, S.values)

    def test_csv_accepted(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text(
            "gene_id,sample1,sample2\ng1,1.5,2.5\ng2,3.0,4.0\n"
        )
        X = read_expression(str(path))
        assert X.gene_ids == ("g1", "g2")
        assert X.values[0, 1] == 2.5

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "x.tsv"
        path.write_text(
            "gene_id\tsample1\tsample2\ng1\t1\t2\n\ng2\t3\t4\n\n"
        )
        assert read_expression(str(path)).gene_ids == ("g1", "g2")

    def test_whitespace_in_fields_tolerated(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("gene_id, sample1, sample2\ng1, 1.0, 2.0\ng2, 3, 4\n")
        X = read_expression(str(path))
        assert X.gene_ids == ("g1", "g2")
        assert X.values[1, 0] == 3.0


class TestExpressionParseErrors:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "x.tsv"
        path.write_text("")
        with pytest.raises(ParseError, match="empty"):
            read_expression(str(path))

    def test_no_delimiter(self, tmp_path):
        path = tmp_path / "x.tsv"
        path.write_text("gene_id sample1 sample2\n")
        with pytest.raises(ParseError) as err:
            read_expression(str(path))
        assert err.value.line == 1

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "x.tsv"
        path.write_text("id\tleft\tright\ng1\t1\t2\n")
        with pytest.raises(ParseError) as err:
            read_expression(str(path))
        assert err.value.line == 1

    def test_field_count_reports_line(self, tmp_path):
        path = tmp_path / "x.tsv"
        path.write_text("gene_id\tsample1\tsample2\ng1\t1\t2\ng2\t3\n")
        with pytest.raises(ParseError) as err:
            read_expression(str(path))
        assert err.value.line == 3
        assert "3 fields" in str(err.value)

    def test_bad_float_reports_line(self, tmp_path):
        path = tmp_path / "x.tsv"
        path.write_text("gene_id\tsample1\tsample2\ng1\t1\ttwo\n")
        with pytest.raises(ParseError) as err:
            read_expression(str(path))
        assert err.value.line == 2

    def test_header_only(self, tmp_path):
        path = tmp_path / "x.tsv"
        path.write_text("gene_id\tsample1\tsample2\n")
        with pytest.raises(ParseError, match="no data rows"):
            read_expression(str(path))

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            read_expression(str(tmp_path / "nope.tsv"))


class TestTruthRoundTrip:
    def test_bundle_survives_disk(self, tmp_path):
        ds = generate(SynthConfig(n_genes=30, seed=2))
        truth = truth_from_dataset(ds)
        path = str(tmp_path / "truth.json")
        write_truth(path, truth)
        back = read_truth(path)
        assert np.array_equal(back.mixing.matrix, truth.mixing.matrix)
        assert back.mixing.form == "proportion"
        assert back.sources_by_id == truth.sources_by_id
        assert set(back.mg1_ids) == set(truth.mg1_ids)
        assert set(back.mg2_ids) == set(truth.mg2_ids)
        assert back.de_by_id == truth.de_by_id
        assert no_tmp_left(tmp_path)

    def test_wrong_format_tag(self, tmp_path):
        path = tmp_path / "truth.json"
        path.write_text(json.dumps({"format": "something-else"}))
        with pytest.raises(ParseError, match="not a truth sidecar"):
            read_truth(str(path))

    def test_malformed_payload(self, tmp_path):
        path = tmp_path / "truth.json"
        path.write_text(
            json.dumps({"format": "sectormix-truth-v1", "genes": {}})
        )
        with pytest.raises(ParseError, match="malformed"):
            read_truth(str(path))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "truth.json"
        path.write_text("{not json")
        with pytest.raises(ParseError, match="invalid JSON"):
            read_truth(str(path))

    def test_non_object_top_level(self, tmp_path):
        path = tmp_path / "truth.json"
        path.write_text("[1, 2]")
        with pytest.raises(ParseError, match="JSON object"):
            read_truth(str(path))


def run_noise_free(n_genes=60, seed=5):
    ds = generate(SynthConfig(n_genes=n_genes, seed=seed))
    result = run_pipeline(ds.mixed, OPEN_PREPROCESS, EXACT_MARKERS)
    return ds, result


class TestResultRoundTrip:
    def test_payload_survives_disk(self, tmp_path):
        _, result = run_noise_free()
        config = {"epsilon": 0.0, "norm": "none"}
        payload = build_result_payload(result, config)
        path = str(tmp_path / "result.json")
        write_json(path, payload)
        loaded = read_result(path)
        assert np.array_equal(loaded.mixing.matrix, result.mixing.matrix)
        assert np.array_equal(
            loaded.raw_mixing.matrix, result.mixing_raw.matrix
        )
        assert loaded.config == config
        ids = result.expression.gene_ids
        for i, g in enumerate(ids):
            assert loaded.sources_by_id[g] == tuple(
                result.deconvolution.sources.values[i]
            )
            assert loaded.de_scores_by_id[g] == result.de_scores[i]
        assert set(loaded.mg1_ids) == {ids[i] for i in result.markers.mg1}
        assert loaded.diagnostics["clamped"] is True
        assert loaded.diagnostics["negative_count"] == 0

    def test_e1_diagnostic_included_when_given(self, tmp_path):
        _, result = run_noise_free()
        payload = build_result_payload(result, {}, e1_vs_truth=0.0125)
        assert payload["diagnostics"]["e1_vs_truth"] == 0.0125
        payload = build_result_payload(result, {})
        assert "e1_vs_truth" not in payload["diagnostics"]

    def test_sample_specific_block_shape(self):
        _, result = run_noise_free()
        payload = build_result_payload(result, {})
        block = payload["sample_specific"]
        assert set(block) == {"tissue1", "tissue2"}
        assert set(block["tissue1"]) == {"sample1", "sample2"}
        ids = result.expression.gene_ids
        mg1_ids = {ids[i] for i in result.markers.mg1}
        assert set(block["tissue1"]["sample1"]) == mg1_ids

    def test_wrong_format_tag(self, tmp_path):
        path = tmp_path / "result.json"
        path.write_text(json.dumps({"format": "nope"}))
        with pytest.raises(ParseError, match="not a result file"):
            read_result(str(path))


class TestEvaluateAgainstTruth:
    def test_noise_free_scores_cleanly(self, tmp_path):
        ds = generate(SynthConfig(n_genes=60, seed=5))
        # A hair of relative tolerance: products a_kj * alpha round the
        # marker ratios a few ulps apart, so a zero-width band would only
        # catch the subset that rounds onto the extreme itself.
        result = run_pipeline(
            ds.mixed, OPEN_PREPROCESS, MarkerConfig(epsilon=1e-9)
        )
        truth = truth_from_dataset(ds)
        write_truth(str(tmp_path / "truth.json"), truth)
        write_json(
            str(tmp_path / "result.json"), build_result_payload(result, {})
        )
        loaded = read_result(str(tmp_path / "result.json"))
        back = read_truth(str(tmp_path / "truth.json"))
        report = evaluate_against_truth(loaded, back)
        assert report.e1 == e1_error(loaded.mixing, back.mixing)
        assert report.e1 <= 1e-9
        assert report.pearson_all >= 1 - 1e-9
        # Tied pure ratios at 0 and inf (five markers each) spread into
        # distinct mixed ratios, so the rank correlation dips just below 1.
        assert report.spearman_rank >= 0.999
        assert report.venn == (0, 10, 0)
        assert report.auc == 1.0

    def test_auc_omitted_without_labels(self):
        ds, result = run_noise_free()
        truth = truth_from_dataset(ds)
        stripped = type(truth)(
            mixing=truth.mixing,
            sources_by_id=truth.sources_by_id,
            mg1_ids=truth.mg1_ids,
            mg2_ids=truth.mg2_ids,
            de_by_id=None,
        )
        loaded = read_result_payload(result)
        report = evaluate_against_truth(loaded, stripped)
        assert report.auc is None


def read_result_payload(result):
    from sectormix.io import loaded_result_from_payload

    return loaded_result_from_payload(build_result_payload(result, {}))


class TestWriteJson:
    def test_byte_identical_regardless_of_key_order(self, tmp_path):
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        write_json(a, {"x": 1, "y": [1.5, 2.5], "z": {"k": None}})
        write_json(b, {"z": {"k": None}, "y": [1.5, 2.5], "x": 1})
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_trailing_newline(self, tmp_path):
        path = str(tmp_path / "a.json")
        write_json(path, {"x": 1})
        assert open(path).read().endswith("}\n")


class TestEvaluationOutput:
    REPORT = EvaluationReport(
        e1=0.05,
        pearson_markers=0.99,
        pearson_all=0.999,
        spearman_rank=1.0,
        venn=(1, 4, 2),
        auc=None,
    )

    def test_payload_nests_metrics(self):
        payload = evaluation_payload(self.REPORT, {"report": "json"})
        assert payload["metrics"]["e1"] == 0.05
        assert payload["metrics"]["venn"] == {
            "only_detected": 1,
            "both": 4,
            "only_reference": 2,
        }
        assert payload["metrics"]["auc"] is None

    def test_tsv_uses_na_for_missing_auc(self, tmp_path):
        path = str(tmp_path / "eval.tsv")
        write_evaluation_tsv(path, self.REPORT)
        lines = open(path).read().splitlines()
        assert lines[0] == "metric\tvalue"
        assert lines[1] == "e1\t0.05"
        assert lines[-1] == "auc\tNA"
        assert no_tmp_left(tmp_path)

    def test_tsv_formats_auc_when_present(self, tmp_path):
        report = EvaluationReport(
            e1=0.0,
            pearson_markers=1.0,
            pearson_all=1.0,
            spearman_rank=1.0,
            venn=(0, 5, 0),
            auc=0.975,
        )
        path = str(tmp_path / "eval.tsv")
        write_evaluation_tsv(path, report)
        assert "auc\t0.975" in open(path).read()
