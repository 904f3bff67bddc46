"""Formula mini-language tests."""

import numpy as np
import pytest

from synthratio.dataset import Dataset
from synthratio.errors import InputError, MissingValueError
from synthratio.formula import Term, build_design, parse_formula


class TestParse:
    def test_plain_terms(self):
        f = parse_formula("y ~ a + b + c")
        assert f.response == "y"
        assert [t.column for t in f.terms] == ["a", "b", "c"]
        assert all(t.transform == "identity" for t in f.terms)

    def test_transforms(self):
        f = parse_formula("y ~ log1p(tax) + pow(age,2)")
        assert f.terms[0] == Term("tax", "log1p")
        assert f.terms[1].column == "age"
        assert f.terms[1].transform == "pow"
        assert f.terms[1].exponent == 2.0
        assert f.terms[1].label == "pow(age,2)"

    @pytest.mark.parametrize(
        "bad",
        ["y a + b", "y ~ a ~ b", " ~ a", "y ~ ", "y ~ a + ", "y ~ exp(a)", "y ~ pow(a)"],
    )
    def test_rejects_malformed(self, bad):
        with pytest.raises(InputError):
            parse_formula(bad)


class TestBuildDesign:
    def make(self):
        return Dataset.from_arrays(
            [
                ("y", [1.0, 2.0, 3.0, 4.0]),
                ("x", [0.0, 1.0, 2.0, 3.0]),
                ("g", ["b", "a", "c", "a"]),
            ]
        )

    def test_numeric_and_intercept(self):
        X, y, names = build_design(self.make(), parse_formula("y ~ x"))
        assert names == ("Intercept", "x")
        np.testing.assert_allclose(X[:, 0], 1.0)
        np.testing.assert_allclose(X[:, 1], [0, 1, 2, 3])
        np.testing.assert_allclose(y, [1, 2, 3, 4])

    def test_categorical_dummies_reference_level(self):
        X, _, names = build_design(self.make(), parse_formula("y ~ g"))
        assert names == ("Intercept", "g=b", "g=c")
        np.testing.assert_allclose(X[:, 1], [1, 0, 0, 0])
        np.testing.assert_allclose(X[:, 2], [0, 0, 1, 0])

    def test_reference_table_levels_used(self):
        ds = self.make()
        other = Dataset.from_arrays(
            [
                ("y", [1.0, 1.0]),
                ("x", [0.0, 0.0]),
                ("g", ["a", "a"]),
            ]
        )
        X, _, names = build_design(other, parse_formula("y ~ g"), reference=ds)
        assert names == ("Intercept", "g=b", "g=c")
        np.testing.assert_allclose(X[:, 1:], 0.0)

    def test_transforms_apply(self):
        X, _, names = build_design(self.make(), parse_formula("y ~ log1p(x) + pow(x,2)"))
        np.testing.assert_allclose(X[:, 1], np.log1p([0, 1, 2, 3]))
        np.testing.assert_allclose(X[:, 2], [0, 1, 4, 9])
        assert names[1:] == ("log1p(x)", "pow(x,2)")

    def test_unknown_column(self):
        with pytest.raises(InputError, match="unknown column"):
            build_design(self.make(), parse_formula("y ~ zz"))

    def test_transform_on_categorical_rejected(self):
        with pytest.raises(InputError):
            build_design(self.make(), parse_formula("y ~ log1p(g)"))

    def test_log1p_domain(self):
        ds = Dataset.from_arrays([("y", [1.0]), ("x", [-2.0])])
        with pytest.raises(InputError, match="log1p"):
            build_design(ds, parse_formula("y ~ log1p(x)"))

    def test_categorical_response_rejected(self):
        with pytest.raises(InputError):
            build_design(self.make(), parse_formula("g ~ x"))

    def test_missing_value_rejected(self):
        ds = Dataset.from_arrays([("y", [1.0, np.nan]), ("x", [0.0, 1.0])])
        with pytest.raises(MissingValueError):
            build_design(ds, parse_formula("y ~ x"))
