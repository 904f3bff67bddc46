"""Fixed-precision JSON emission tests."""

import json
import math

import numpy as np
import pytest

from synthratio._jsonio import dumps


class TestDumps:
    def test_floats_round_trip_exactly(self):
        values = [1 / 3, math.pi, 1e-300, 2**52 + 0.5, -7.1e17]
        parsed = json.loads(dumps({"v": values}))
        for original, reloaded in zip(values, parsed["v"]):
            assert reloaded == original

    def test_seventeen_significant_digits(self):
        text = dumps({"x": 1 / 3})
        assert "0.33333333333333331" in text

    def test_nested_structures_and_numpy_types(self):
        payload = {
            "a": np.arange(3),
            "b": [np.float64(0.5), np.int64(2), np.bool_(True)],
            "c": {"d": None, "e": "text", "f": ()},
        }
        parsed = json.loads(dumps(payload))
        assert parsed == {
            "a": [0, 1, 2],
            "b": [0.5, 2, True],
            "c": {"d": None, "e": "text", "f": []},
        }

    def test_non_finite_becomes_null(self):
        parsed = json.loads(dumps([float("nan"), float("inf")]))
        assert parsed == [None, None]

    def test_rejects_unknown_types(self):
        with pytest.raises(TypeError):
            dumps({"x": object()})
