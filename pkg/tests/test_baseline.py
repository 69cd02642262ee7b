import numpy as np
import pytest

from tabtext.baseline import (
    FeatureMatrix,
    SERIES_STATS,
    build_baseline_features,
    encode_categorical,
    summarize_series,
)
from tabtext.data_model import (
    CellValue,
    ColumnKind,
    ColumnSpec,
    TableMeta,
    TableSchema,
    parse_table,
)
from tabtext.errors import StageError


def cells(*raws):
    return [CellValue.absent("") if r is None else CellValue.present(r) for r in raws]


class TestEncodeCategorical:
    def test_frequency_capping_with_lexicographic_ties(self):
        names, matrix = encode_categorical(cells("A", "B", "A", "C"), max_categories=2)
        assert names == ["A", "B", "other"]
        # row "C" lands in other
        np.testing.assert_array_equal(matrix[3], [0, 0, 1])
        np.testing.assert_array_equal(matrix[0], [1, 0, 0])

    def test_all_missing_gives_all_zero(self):
        names, matrix = encode_categorical(cells(None, None), max_categories=3)
        assert names == ["other"]
        assert matrix.sum() == 0

    def test_no_capping_when_categories_fit(self):
        names, matrix = encode_categorical(cells("x", "y", "z"), max_categories=3)
        assert names == ["x", "y", "z", "other"]
        assert matrix[:, -1].sum() == 0

    def test_invalid_max_categories(self):
        with pytest.raises(ValueError):
            encode_categorical(cells("a"), max_categories=0)


def naive_summary(pairs):
    """Independent two-pass oracle with plain loops."""
    if not pairs:
        return {s: 0.0 for s in SERIES_STATS}
    ordered = sorted(pairs, key=lambda p: p[0])
    vals = [v for _, v in ordered]
    n = len(vals)
    mean = sum(vals) / n
    if n > 1:
        var = sum((v - mean) ** 2 for v in vals) / (n - 1)
        change = (vals[-1] - vals[0]) / (n - 1)
    else:
        var = 0.0
        change = 0.0
    return {
        "mean": mean,
        "min": min(vals),
        "max": max(vals),
        "variance": var,
        "average_change": change,
        "count": float(n),
    }


class TestSummarizeSeries:
    def test_simple_arithmetic(self):
        stats = summarize_series([(1, 1.0), (2, 2.0), (3, 3.0)])
        assert stats == {
            "mean": 2.0,
            "min": 1.0,
            "max": 3.0,
            "variance": 1.0,
            "average_change": 1.0,
            "count": 3.0,
        }

    def test_singleton(self):
        stats = summarize_series([(5, 7.0)])
        assert stats == {
            "mean": 7.0,
            "min": 7.0,
            "max": 7.0,
            "variance": 0.0,
            "average_change": 0.0,
            "count": 1.0,
        }

    def test_empty(self):
        assert summarize_series([]) == {s: 0.0 for s in SERIES_STATS}

    def test_sorted_by_timestamp_before_slope(self):
        # same values, shuffled timestamps: slope uses time order
        stats = summarize_series([(3, 9.0), (1, 1.0), (2, 4.0)])
        assert stats["average_change"] == (9.0 - 1.0) / 2

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(0, 21))
            pairs = [
                (float(rng.uniform(0, 10)), float(rng.normal())) for _ in range(n)
            ]
            got = summarize_series(pairs)
            expected = naive_summary(pairs)
            for stat in SERIES_STATS:
                assert got[stat] == pytest.approx(expected[stat], abs=1e-10)


STATIC_SCHEMA = TableSchema(
    meta=TableMeta(table_title="Demo"),
    columns=(
        ColumnSpec(name="id", kind=ColumnKind.CATEGORICAL),
        ColumnSpec(name="age", kind=ColumnKind.NUMERIC),
        ColumnSpec(name="height", kind=ColumnKind.NUMERIC),
        ColumnSpec(name="weight", kind=ColumnKind.NUMERIC),
        ColumnSpec(name="color", kind=ColumnKind.CATEGORICAL),
        ColumnSpec(name="note", kind=ColumnKind.FREE_TEXT),
    ),
    entity_column="id",
)

SERIES_SCHEMA = TableSchema(
    meta=TableMeta(table_title="Vitals"),
    columns=(
        ColumnSpec(name="id", kind=ColumnKind.CATEGORICAL),
        ColumnSpec(name="t", kind=ColumnKind.TIMESTAMP),
        ColumnSpec(name="hr", kind=ColumnKind.NUMERIC),
    ),
    entity_column="id",
    time_column="t",
)


def fixture_sources():
    static_rows = parse_table(
        "id,age,height,weight,color,note\n"
        "p1,50,170,70,red,hello\n"
        "p2,NaN,180,80,blue,world\n"
        "p3,61,175,NaN,red,\n",
        STATIC_SCHEMA,
    )
    series_rows = parse_table(
        "id,t,hr\np1,1,60\np1,2,62\np2,1,70\n",
        SERIES_SCHEMA,
    )
    return [
        ("demo", STATIC_SCHEMA, static_rows),
        ("vitals", SERIES_SCHEMA, series_rows),
    ]


class TestBuildBaselineFeatures:
    def test_feature_accounting(self):
        # 3 numeric + categorical capped at 2 -> 3 columns, series -> 6 stats
        matrix = build_baseline_features(
            fixture_sources(), ["p1", "p2", "p3"], max_categories=2
        )
        assert len(matrix.feature_names) == 3 + 3 + 6

    def test_missing_numeric_imputed_zero(self):
        matrix = build_baseline_features(fixture_sources(), ["p1", "p2", "p3"])
        age = matrix.values[:, matrix.feature_names.index("demo.age")]
        np.testing.assert_array_equal(age, [50.0, 0.0, 61.0])

    def test_series_expands_to_six_stats(self):
        matrix = build_baseline_features(fixture_sources(), ["p1", "p2", "p3"])
        hr_names = [n for n in matrix.feature_names if n.startswith("vitals.hr.")]
        assert hr_names == [f"vitals.hr.{s}" for s in SERIES_STATS]
        mean = matrix.values[:, matrix.feature_names.index("vitals.hr.mean")]
        np.testing.assert_allclose(mean, [61.0, 70.0, 0.0])

    def test_free_text_dropped(self):
        matrix = build_baseline_features(fixture_sources(), ["p1", "p2", "p3"])
        assert not any("note" in n for n in matrix.feature_names)

    def test_all_values_finite(self):
        matrix = build_baseline_features(fixture_sources(), ["p1", "p2", "p3"])
        assert np.all(np.isfinite(matrix.values))

    def test_unknown_series_entity_is_error(self):
        sources = fixture_sources()
        with pytest.raises(StageError, match="p2"):
            build_baseline_features(sources, ["p1", "p3"])

    def test_duplicate_static_row_is_error(self):
        rows = parse_table(
            "id,age,height,weight,color,note\np1,1,2,3,a,x\np1,4,5,6,b,y\n",
            STATIC_SCHEMA,
        )
        with pytest.raises(StageError, match="multiple rows"):
            build_baseline_features([("demo", STATIC_SCHEMA, rows)], ["p1"])

    def test_entity_absent_from_static_source_gets_zeros(self):
        matrix = build_baseline_features(fixture_sources(), ["p1", "p2", "p3", "p4"])
        idx = matrix.entity_ids.index("p4")
        np.testing.assert_array_equal(matrix.values[idx], 0.0)


class TestFeatureMatrix:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            FeatureMatrix(["a"], ["f1", "f2"], np.zeros((1, 1)))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="non-finite"):
            FeatureMatrix(["a"], ["f"], np.array([[np.nan]]))

    def test_csv_round_trip(self, tmp_path):
        matrix = FeatureMatrix(
            entity_ids=["a", "b"],
            feature_names=["x", "y"],
            values=np.array([[0.1, 1 / 3], [2.5, -7e-12]]),
            labels=np.array([0, 1]),
        )
        path = tmp_path / "features.csv"
        matrix.to_csv(path)
        loaded = FeatureMatrix.from_csv(path)
        assert loaded.entity_ids == matrix.entity_ids
        assert loaded.feature_names == matrix.feature_names
        np.testing.assert_array_equal(loaded.values, matrix.values)
        np.testing.assert_array_equal(loaded.labels, matrix.labels)

    def test_csv_round_trip_without_labels(self, tmp_path):
        matrix = FeatureMatrix(["a"], ["x"], np.array([[1.25]]))
        path = tmp_path / "f.csv"
        matrix.to_csv(path)
        loaded = FeatureMatrix.from_csv(path)
        assert loaded.labels is None
        np.testing.assert_array_equal(loaded.values, matrix.values)
