import numpy as np
import pytest

from remodkit.core import csv_text
from remodkit.errors import ParseError, SchemaError, UsageError
from remodkit.features import (
    CK_CLASS_METRICS,
    ClassMetricsRow,
    ProjectFeatureVector,
    aggregate_metrics,
    parse_metrics_csv,
    read_feature_csv,
    standardise,
    write_feature_csv,
)


def test_small_csv():
    rows = parse_metrics_csv("class,loc,wmc\nA,10,2\nB,4,1\n")
    assert [r.class_name for r in rows] == ["A", "B"]
    assert rows[0].metrics == {"loc": 10.0, "wmc": 2.0}


def test_forty_metrics_give_160_features():
    assert len(CK_CLASS_METRICS) == 40
    text = csv_text([["A", *range(40)], ["B", *range(1, 41)]], ["class", *CK_CLASS_METRICS])
    rows = parse_metrics_csv(text)
    assert all(len(r.metrics) == 40 for r in rows)
    assert len(aggregate_metrics(rows).values) == 160


def test_csv_errors():
    with pytest.raises(ParseError) as exc:
        parse_metrics_csv("class,loc\nA,NaN\n")
    assert exc.value.line == 2 and exc.value.column == "loc"
    with pytest.raises(ParseError):
        parse_metrics_csv("class,loc\nA,big\n")
    with pytest.raises(SchemaError):
        parse_metrics_csv("name,loc\nA,1\n")


def test_aggregation_arithmetic():
    fv = aggregate_metrics([ClassMetricsRow("A", {"loc": 2}), ClassMetricsRow("B", {"loc": 4})])
    assert fv.values == {"loc_max": 4, "loc_mean": 3, "loc_std": 1, "loc_sum": 6}


def test_aggregation_degenerate():
    fv = aggregate_metrics([ClassMetricsRow("A", {"loc": 7})])
    assert fv.values == {"loc_max": 7, "loc_mean": 7, "loc_std": 0, "loc_sum": 7}
    fv = aggregate_metrics([ClassMetricsRow(c, {"loc": 3}) for c in "ABC"])
    assert fv.values["loc_std"] == 0
    with pytest.raises(UsageError):
        aggregate_metrics([])
    with pytest.raises(SchemaError):
        aggregate_metrics([ClassMetricsRow("A", {"loc": 1}), ClassMetricsRow("B", {"wmc": 1})])


def test_standardise():
    vecs = [ProjectFeatureVector("p", "1", {"f": 1.0, "k": 5.0}),
            ProjectFeatureVector("p", "2", {"f": 3.0, "k": 5.0})]
    z, t = standardise(vecs)
    np.testing.assert_allclose(z[:, 0], [-1.0, 1.0])
    np.testing.assert_array_equal(z[:, 1], [0.0, 0.0])
    assert t.zero_variance == ("k",)
    np.testing.assert_allclose(t.transform_vector(vecs[1]), [1.0, 0.0])


def test_standardise_mismatched_sets():
    with pytest.raises(SchemaError):
        standardise([ProjectFeatureVector("p", "1", {"f": 1.0}), ProjectFeatureVector("p", "2", {"g": 1.0})])


def test_feature_csv_round_trip():
    vecs = [ProjectFeatureVector("p", "1", {"a_max": 0.1, "a_sum": 1e-17}),
            ProjectFeatureVector("q", "2", {"a_max": 2.0, "a_sum": 3.0})]
    back = read_feature_csv(write_feature_csv(vecs))
    assert back == vecs
