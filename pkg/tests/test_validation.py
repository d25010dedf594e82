import numpy as np
import pytest

from eegspect.validation import (
    as_float_matrix,
    as_float_vector,
    check_in_range,
    check_positive,
)


class TestAsFloatVector:
    def test_coerces_lists_to_float64(self):
        v = as_float_vector([1, 2, 3], "signal")
        assert v.dtype == np.float64
        np.testing.assert_array_equal(v, [1.0, 2.0, 3.0])

    @pytest.mark.parametrize(
        "bad", [np.zeros((2, 2)), [], [1.0, np.nan], [np.inf]], ids=["2d", "empty", "nan", "inf"]
    )
    def test_rejections_name_the_argument(self, bad):
        with pytest.raises(ValueError, match="signal"):
            as_float_vector(bad, "signal")


class TestAsFloatMatrix:
    def test_accepts_nested_lists(self):
        m = as_float_matrix([[1, 2], [3, 4]], "X")
        assert m.shape == (2, 2) and m.dtype == np.float64

    @pytest.mark.parametrize(
        "bad",
        [np.zeros(3), np.zeros((0, 4)), np.array([[1.0, np.nan]])],
        ids=["1d", "zero-rows", "nan"],
    )
    def test_rejections_name_the_argument(self, bad):
        with pytest.raises(ValueError, match="X"):
            as_float_matrix(bad, "X")


class TestScalarChecks:
    def test_check_positive(self):
        assert check_positive(2.5, "fs") == 2.5
        with pytest.raises(ValueError, match="fs"):
            check_positive(0, "fs")

    def test_check_in_range_is_strict(self):
        assert check_in_range(0.5, 0.0, 1.0, "fraction") == 0.5
        with pytest.raises(ValueError, match="fraction"):
            check_in_range(1.0, 0.0, 1.0, "fraction")
