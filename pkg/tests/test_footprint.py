import numpy as np
import pytest

from datasets import CENTRES, CONFIGS, blob_corpus
from remodkit.core import Decomposition, HierarchicalConfig, RunResult
from remodkit.errors import InvariantError, MissingCellError, SchemaError
from remodkit.features import ProjectFeatureVector
from remodkit.selection import (
    METRICS_HEADER,
    NONE_LABEL,
    FeatureGAParams,
    FootprintModel,
    PerformanceTable,
    fit_footprint,
    label_runs,
    recommend,
    train_footprints,
)



def table(cells, configs=CONFIGS):
    rows = tuple(("p", f"1.{i}") for i in range(len(cells)))
    return PerformanceTable(rows, configs, np.asarray(cells, dtype=float))


def test_best_config_and_labels():
    t = table([[95.56, 80.0, 60.0], [10.0, 20.0, 30.0]])
    lab = label_runs(t, 70)
    assert lab.best == ("cosine_average_10", "manhattan_complete_7")
    assert lab.good["euclidean_single_5"].tolist() == [True, False]
    assert not any(lab.good[c][1] for c in CONFIGS)


def test_tie_goes_to_canonical_order():
    assert table([[80.0, 80.0, 10.0]]).best_configs() == ["cosine_average_10"]


def test_argmax_invariant_under_scaling():
    rng = np.random.default_rng(0)
    cells = rng.uniform(0, 100, (20, 3))
    assert table(cells).best_configs() == table(cells * 0.5 + 1).best_configs()


def test_missing_cells_listed():
    with pytest.raises(MissingCellError) as exc:
        table([[1.0, np.nan, 3.0]])
    assert ("p/1.0", "euclidean_single_5") in exc.value.gaps
    with pytest.raises(InvariantError):
        PerformanceTable((("p", "1"),), CONFIGS[::-1], np.zeros((1, 3)))


def test_table_from_results_and_csv():
    d = Decomposition({"c0": {"a"}})
    cfg = HierarchicalConfig("cosine", "average", 10)
    res = [RunResult("p", "1", cfg, 50.0, d, 0), RunResult("q", "1", cfg, 75.0, d, 0)]
    t = PerformanceTable.from_results(res)
    assert t.rows == (("p", "1"), ("q", "1")) and t.configs == ("cosine_average_10",)
    back = PerformanceTable.from_csv(t.to_csv())
    assert back.rows == t.rows and np.array_equal(back.cells, t.cells)
    with pytest.raises(InvariantError):
        PerformanceTable.from_results(res + res[:1])
    with pytest.raises(MissingCellError):
        PerformanceTable.from_results(res, configs=["cosine_average_10", "ga_turbomq"])


def test_all_bad_config_gets_constant_footprint():
    pts = np.random.default_rng(1).normal(size=(14, 2))
    good = np.zeros(14, dtype=bool)
    fp = fit_footprint("ga_turbomq", pts, good)
    assert fp.degenerate and (fp.precision, fp.recall) == (0.0, 0.0) and fp.accuracy == 100.0
    good[:1] = True
    fp = fit_footprint("ga_turbomq", pts, good)
    assert fp.degenerate and fp.accuracy == pytest.approx(100 * 13 / 14)


@pytest.fixture(scope="module")
def blob_model():
    t, vectors = blob_corpus()
    return train_footprints(t, vectors, ga_params=FeatureGAParams(population=12, generations=4)), vectors


def test_constant_feature_dropped(blob_model):
    report, _ = blob_model
    assert report.model.standardiser.zero_variance == ("k_sum",)
    assert "k_sum" not in report.model.space.selected_features


def test_self_consistency(blob_model):
    report, vectors = blob_model
    model = report.model
    worst_cv = min(fp.accuracy for fp in model.footprints.values()) / 100
    hits = [recommend(model, v).best == b for v, b in zip(vectors, report.labels.best)]
    assert np.mean(hits) >= worst_cv
    assert np.mean(hits) >= 0.9


def test_deep_point_ranked_first(blob_model):
    report, _ = blob_model
    for cfg, (cx, cy) in CENTRES.items():
        fv = ProjectFeatureVector("new", "1", {"g_mean": cx, "h_sum": cy, "n1_max": 0.0, "n2_std": 0.0,
                                               "k_sum": 5.0})
        rec = recommend(report.model, fv)
        assert rec.best == cfg and not rec.none
        assert rec.ranking[0][1] > 0


def test_far_point_flags_none(blob_model):
    report, _ = blob_model
    fv = ProjectFeatureVector("new", "1", {"g_mean": 0.0, "h_sum": -40.0, "n1_max": 0.0, "n2_std": 0.0,
                                           "k_sum": 5.0})
    rec = recommend(report.model, fv)
    assert rec.none and rec.best == NONE_LABEL
    assert rec.to_json()["recommended"] == "None"


def test_select_agrees_with_decision_values(blob_model):
    model = blob_model[0].model
    grid = np.mgrid[-6:6:15j, -6:6:15j].reshape(2, -1).T
    dv = model.decision_values(grid)
    for row, choice in zip(dv, model.select(grid)):
        if choice == NONE_LABEL:
            assert (row <= 0).all()
        else:
            j = model.configs.index(choice)
            assert row[j] > 0 and row[j] == row.max()


def test_missing_selected_feature(blob_model):
    model = blob_model[0].model
    name = model.space.selected_features[0]
    with pytest.raises(SchemaError, match=name):
        model.locate(ProjectFeatureVector("x", "1", {}))


def test_model_json_round_trip(blob_model):
    report, vectors = blob_model
    model = report.model
    back = FootprintModel.loads(model.dumps())
    assert back.dumps() == model.dumps()
    for v in vectors[:5]:
        assert recommend(back, v).ranking == recommend(model, v).ranking
    with pytest.raises(SchemaError):
        FootprintModel.from_json({"format": "other"})


def test_metrics_csv_layout(blob_model):
    model = blob_model[0].model
    lines = model.metrics_csv().splitlines()
    assert lines[0] == ",".join(METRICS_HEADER)
    assert [ln.split(",")[0] for ln in lines[1:]] == list(CONFIGS)
    for ln in lines[1:]:
        assert all(0 <= float(v) <= 100 for v in ln.split(",")[1:])
