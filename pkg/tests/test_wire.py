"""Canonical JSON output: bit-exact reals, quoted non-finite, stable shapes."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evisearch import wire
from evisearch.decision import ClassScores, KTuneResult
from evisearch.index import NeighborHit
from evisearch.metrics import fairness_report, mauc, roc_curve


class TestFormatReal:
    def test_plain_values(self):
        assert wire.format_real(1.0) == "1"
        assert wire.format_real(0.1) == "0.10000000000000001"
        assert wire.format_real(-2.5) == "-2.5"

    def test_non_finite_become_quoted_strings(self):
        assert wire.format_real(float("inf")) == '"inf"'
        assert wire.format_real(float("-inf")) == '"-inf"'
        assert wire.format_real(float("nan")) == '"nan"'

    @given(st.floats(allow_nan=False, allow_infinity=False))
    @settings(max_examples=300, deadline=None)
    def test_seventeen_digits_round_trip_exactly(self, value):
        assert float(wire.format_real(value)) == value or (
            value == 0.0 and float(wire.format_real(value)) == 0.0
        )


class TestDumps:
    def test_compact_and_insertion_ordered(self):
        text = wire.dumps({"b": 1, "a": [True, False, None]})
        assert text == '{"b":1,"a":[true,false,null]}'

    def test_numpy_scalars_and_arrays(self):
        assert wire.dumps(np.int64(7)) == "7"
        assert wire.dumps(np.float64(2.5)) == "2.5"
        assert wire.dumps(np.array([1.0, 0.5])) == "[1,0.5]"

    def test_string_escaping(self):
        assert wire.dumps({"k": 'va"l'}) == '{"k":"va\\"l"}'

    def test_non_finite_inside_structures(self):
        parsed = json.loads(wire.dumps({"x": float("inf"), "y": float("nan")}))
        assert parsed == {"x": "inf", "y": "nan"}

    def test_unknown_type_rejected(self):
        with pytest.raises(TypeError):
            wire.dumps(object())

    @given(
        st.recursive(
            st.one_of(
                st.floats(allow_nan=False, allow_infinity=False),
                st.integers(-(2**53), 2**53),
                st.text(max_size=8),
                st.booleans(),
                st.none(),
            ),
            lambda inner: st.one_of(
                st.lists(inner, max_size=4),
                st.dictionaries(st.text(max_size=5), inner, max_size=4),
            ),
            max_leaves=12,
        )
    )
    @settings(max_examples=150, deadline=None)
    def test_round_trips_through_stdlib_parser(self, obj):
        assert json.loads(wire.dumps(obj)) == obj

    def test_repeated_calls_byte_identical(self):
        payload = {"scores": [0.1, 2.0 / 3.0, 1e-300], "n": 3}
        assert wire.dumps(payload) == wire.dumps(payload)


class TestPayloads:
    def test_hit_payload_minimal(self):
        hit = NeighborHit(id="r1", score=0.5)
        assert wire.hit_payload(hit) == {"id": "r1", "score": 0.5, "label": None}

    def test_hit_payload_full(self):
        hit = NeighborHit(
            id="r1",
            score=0.5,
            label="a",
            target_months=12,
            attributes={"gender": "F"},
        )
        payload = wire.hit_payload(hit)
        assert payload["target_months"] == 12
        assert payload["attributes"] == {"gender": "F"}

    def test_hits_payload_preserves_order(self):
        hits = [NeighborHit(id="x", score=2.0), NeighborHit(id="y", score=1.0)]
        assert [p["id"] for p in wire.hits_payload(hits)] == ["x", "y"]

    def test_class_scores_payload(self):
        scores = ClassScores(classes=("a", "b"), raw=(1.4, 0.8), probabilities=(0.6, 0.4))
        payload = wire.class_scores_payload(scores)
        assert payload == {
            "classes": ["a", "b"],
            "raw": [1.4, 0.8],
            "probabilities": [0.6, 0.4],
        }

    def test_roc_payload_carries_sentinel_as_string(self):
        curve = roc_curve([0.9, 0.1], [True, False])
        parsed = json.loads(wire.dumps(wire.roc_payload(curve)))
        assert parsed["auc"] == 1.0
        assert parsed["points"][0]["threshold"] == "inf"
        assert parsed["points"][0] == {"threshold": "inf", "fpr": 0.0, "tpr": 0.0}

    def test_mauc_payload_sorts_classes(self):
        result = mauc(
            [{"b": 0.9, "a": 0.1}, {"b": 0.2, "a": 0.8}],
            ["b", "a"],
        )
        payload = wire.mauc_payload(result)
        assert list(payload["per_class"]) == ["a", "b"]
        assert payload["mauc"] == result.mauc

    def test_fairness_payload_shape(self):
        attributes = [{"gender": g} for g in ("F", "F", "M", "M")]
        probs = [{"pos": p, "neg": 1 - p} for p in (0.9, 0.1, 0.8, 0.2)]
        labels = ["pos", "neg", "pos", "neg"]
        report = fairness_report(attributes, probs, labels, "gender")
        payload = wire.fairness_payload(report)
        assert payload["grouping"] == "gender"
        assert [row["group"] for row in payload["rows"]] == ["F", "M"]
        assert payload["excluded_count"] == 0
        assert set(payload["rows"][0]["per_class"]) == set(payload["classes"])

    def test_tune_payload(self):
        result = KTuneResult(best_k=5, table=((1, 0.5), (5, 0.75)))
        assert wire.tune_payload(result) == {
            "best_k": 5,
            "table": [{"k": 1, "metric": 0.5}, {"k": 5, "metric": 0.75}],
        }

    def test_nan_mauc_stays_parseable(self):
        # A payload holding a non-finite real must still be valid JSON.
        text = wire.dumps({"mauc": float("nan")})
        assert math.isnan(float(json.loads(text)["mauc"]))
