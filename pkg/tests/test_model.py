import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sectormix.errors import (
    DuplicateGeneId,
    NegativeEntry,
    NegativeValue,
    NonFiniteValue,
    RowSumViolation,
    ShapeMismatch,
    SingularMixing,
)
from sectormix.model import (
    InvalidMarkerSets,
    validate_expression_matrix,
    validate_marker_sets,
    validate_mixing_matrix,
)


class TestExpressionMatrix:
    def test_minimal_valid(self):
        X = validate_expression_matrix(["g1", "g2"], [[1, 2], [3, 4]])
        assert X.n_genes == 2
        assert X.gene_ids == ("g1", "g2")
        assert X.values.shape == (2, 2)
        assert X.axis_kind == "samples"

    def test_duplicate_gene_id(self):
        with pytest.raises(DuplicateGeneId) as err:
            validate_expression_matrix(["g1", "g1"], [[1, 2], [3, 4]])
        assert err.value.gene_id == "g1"

    def test_negative_value(self):
        with pytest.raises(NegativeValue) as err:
            validate_expression_matrix(["g1", "g2"], [[1, -2], [3, 4]])
        assert (err.value.row, err.value.col) == (0, 1)
        assert err.value.value == -2.0

    def test_non_finite(self):
        with pytest.raises(NonFiniteValue) as err:
            validate_expression_matrix(["g1", "g2"], [[1, 2], [np.nan, 4]])
        assert (err.value.row, err.value.col) == (1, 0)

    def test_wrong_width(self):
        with pytest.raises(ShapeMismatch):
            validate_expression_matrix(["g1", "g2"], [[1, 2, 3], [4, 5, 6]])

    def test_id_count_mismatch(self):
        with pytest.raises(ShapeMismatch):
            validate_expression_matrix(["g1"], [[1, 2], [3, 4]])

    def test_single_gene_rejected(self):
        with pytest.raises(ShapeMismatch):
            validate_expression_matrix(["g1"], [[1, 2]])

    def test_non_numeric(self):
        with pytest.raises(ShapeMismatch):
            validate_expression_matrix(["g1", "g2"], [["a", "b"], ["c", "d"]])

    def test_values_frozen(self):
        X = validate_expression_matrix(["g1", "g2"], [[1, 2], [3, 4]])
        with pytest.raises(ValueError):
            X.values[0, 0] = 99.0

    def test_axis_kind_tissues(self):
        X = validate_expression_matrix(
            ["g1", "g2"], [[1, 2], [3, 4]], axis_kind="tissues"
        )
        assert X.axis_kind == "tissues"
        with pytest.raises(ValueError):
            validate_expression_matrix(["g1", "g2"], [[1, 2], [3, 4]], "cols")

    def test_row_column_accessors(self):
        X = validate_expression_matrix(["g1", "g2"], [[1, 2], [3, 4]])
        assert list(X.column(0)) == [1.0, 3.0]
        assert list(X.column(1)) == [2.0, 4.0]
        assert list(X.row(1)) == [3.0, 4.0]

    def test_zero_values_allowed(self):
        X = validate_expression_matrix(["g1", "g2"], [[0, 0], [1, 1]])
        assert X.values[0, 0] == 0.0


class TestMixingMatrix:
    def test_assigned_proportions(self):
        A = validate_mixing_matrix(
            [[0.75, 0.25], [0.25, 0.75]], form="proportion"
        )
        assert A.det == 0.5
        assert A.form == "proportion"
        assert list(A.column(0)) == [0.75, 0.25]
        assert list(A.column(1)) == [0.25, 0.75]
        assert np.array_equal(A.matrix, [[0.75, 0.25], [0.25, 0.75]])

    def test_identity_proportion(self):
        A = validate_mixing_matrix([[1, 0], [0, 1]], form="proportion")
        assert A.det == 1.0

    def test_dependent_columns(self):
        with pytest.raises(SingularMixing):
            validate_mixing_matrix([[0.5, 0.5], [0.5, 0.5]], form="proportion")

    def test_near_singular(self):
        with pytest.raises(SingularMixing):
            validate_mixing_matrix([[1, 1], [1, 1 + 1e-12]])

    def test_negative_entry(self):
        with pytest.raises(NegativeEntry) as err:
            validate_mixing_matrix([[1, -0.1], [0, 1]])
        assert (err.value.row, err.value.col) == (0, 1)

    def test_non_finite_entry(self):
        with pytest.raises(NonFiniteValue):
            validate_mixing_matrix([[1, np.inf], [0, 1]])

    def test_row_sum_violation(self):
        with pytest.raises(RowSumViolation) as err:
            validate_mixing_matrix([[0.75, 0.35], [0.25, 0.75]], "proportion")
        assert err.value.row == 0
        assert err.value.total == pytest.approx(1.1)

    def test_raw_form_skips_row_sums(self):
        A = validate_mixing_matrix([[2, 1], [1, 3]])
        assert A.form == "raw"

    def test_wrong_shape(self):
        with pytest.raises(ShapeMismatch):
            validate_mixing_matrix([[1, 0, 0], [0, 1, 0]])

    def test_bad_form(self):
        with pytest.raises(ValueError):
            validate_mixing_matrix([[1, 0], [0, 1]], form="rows")

    @given(
        p1=st.floats(0.05, 0.95),
        p2=st.floats(0.05, 0.95),
    )
    def test_proportion_rows_accepted_when_separated(self, p1, p2):
        entries = [[p1, 1.0 - p1], [p2, 1.0 - p2]]
        det = p1 * (1.0 - p2) - (1.0 - p1) * p2
        if abs(det) < 1e-6:
            return
        A = validate_mixing_matrix(entries, form="proportion")
        assert A.a11 + A.a12 == pytest.approx(1.0, abs=1e-9)
        assert A.det == pytest.approx(det)


class TestMarkerSets:
    def test_valid(self):
        ms = validate_marker_sets([3, 1], [2], 0.1, 10.0, 0.5, 5)
        assert ms.mg1 == (1, 3)
        assert ms.mg2 == (2,)
        assert ms.k_min == 0.1
        assert ms.k_max == 10.0
        assert ms.epsilon == 0.5

    def test_out_of_range(self):
        with pytest.raises(InvalidMarkerSets):
            validate_marker_sets([5], [1], 0.1, 10.0, 0.0, 5)
        with pytest.raises(InvalidMarkerSets):
            validate_marker_sets([-1], [1], 0.1, 10.0, 0.0, 5)

    def test_overlap(self):
        with pytest.raises(InvalidMarkerSets):
            validate_marker_sets([1, 2], [2, 3], 0.1, 10.0, 0.0, 5)

    def test_ratio_order(self):
        with pytest.raises(InvalidMarkerSets):
            validate_marker_sets([0], [1], 10.0, 0.1, 0.0, 5)
        with pytest.raises(InvalidMarkerSets):
            validate_marker_sets([0], [1], np.nan, 1.0, 0.0, 5)

    def test_negative_epsilon(self):
        with pytest.raises(InvalidMarkerSets):
            validate_marker_sets([0], [1], 0.1, 10.0, -0.1, 5)

    def test_empty_sets_allowed(self):
        ms = validate_marker_sets([], [], 0.5, 2.0, 0.0, 5)
        assert ms.mg1 == ()
        assert ms.mg2 == ()

    def test_infinite_k_max(self):
        ms = validate_marker_sets([0], [1], 0.0, np.inf, 0.0, 2)
        assert ms.k_max == np.inf
