import logging

import numpy as np
import pytest

from copula_da.datasets import (AIRFOIL_COLUMNS, DATA_ENV, data_dir, fetch, load_dataset,
                                read_csv)
from copula_da.errors import DatasetError

WINE_HEADER = ["fixed acidity", "volatile acidity", "alcohol", "quality"]


def _write(path, header, rows, sep=","):
    lines = [sep.join(header)] + [sep.join(repr(float(v)) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _wine_dir(tmp_path, rng, n_red=30, n_white=50):
    header = [f'"{h}"' for h in WINE_HEADER]
    _write(tmp_path / "winequality-red.csv", header, rng.uniform(1, 9, (n_red, 4)), sep=";")
    _write(tmp_path / "winequality-white.csv", header, rng.uniform(1, 9, (n_white, 4)), sep=";")
    return tmp_path


def test_read_csv_semicolon_and_quotes(tmp_path, rng):
    path = _wine_dir(tmp_path, rng)
    header, data = read_csv(path / "winequality-red.csv")
    assert header == WINE_HEADER
    assert data.shape == (30, 4)


def test_read_csv_errors_name_the_problem(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n3,oops\n")
    with pytest.raises(DatasetError, match=r"bad.csv:3.*'b'"):
        read_csv(p)
    p.write_text("a,b\n1,2\n3\n")
    with pytest.raises(DatasetError, match="expected 2 fields"):
        read_csv(p)
    p.write_text("a,b\n1,nan\n")
    with pytest.raises(DatasetError):
        read_csv(p)
    p.write_text("")
    with pytest.raises(DatasetError, match="empty"):
        read_csv(p)
    with pytest.raises(DatasetError, match="no such file"):
        read_csv(tmp_path / "missing.csv")


def test_wine_directory_split(tmp_path, rng):
    d = load_dataset(_wine_dir(tmp_path, rng), "wine_red_to_white")
    assert d.X_S.shape == (30, 3) and d.X_T.shape == (50, 3)
    assert d.target_name == "quality"
    assert d.feature_names == WINE_HEADER[:3]


def test_wine_single_file_with_flag(tmp_path, rng):
    rows = np.column_stack([rng.uniform(0, 1, (20, 4)), np.r_[np.ones(8), np.zeros(12)]])
    p = _write(tmp_path / "wine.csv", WINE_HEADER + ["is_red"], rows)
    X_S, y_S, X_T, y_T = load_dataset(p, "wine_red_to_white")
    assert len(y_S) == 8 and len(y_T) == 12 and X_S.shape[1] == 3


def test_wine_missing_quality_names_the_column(tmp_path, rng):
    _write(tmp_path / "winequality-red.csv", ["a", "b"], rng.uniform(size=(5, 2)))
    _write(tmp_path / "winequality-white.csv", ["a", "b"], rng.uniform(size=(5, 2)))
    with pytest.raises(DatasetError, match="'quality'"):
        load_dataset(tmp_path, "wine_red_to_white")


def test_airfoil_median_split(tmp_path, rng):
    rows = rng.uniform(0, 1, (41, 6))
    rows[:, 1] = rng.integers(0, 5, 41)  # many ties at the median
    p = _write(tmp_path / "air.csv", list(AIRFOIL_COLUMNS), rows)
    d = load_dataset(p, "airfoil_median_feature2")
    med = np.median(rows[:, 1])
    assert np.all(d.X_S[:, 1] < med) and np.all(d.X_T[:, 1] >= med)
    assert abs(len(d.y_S) - len(d.y_T)) <= np.sum(rows[:, 1] == med) + 1
    assert d.target_name == "scaled_sound_pressure_level"


def test_parkinsons_split(tmp_path, rng):
    header = ["subject#", "age", "sex", "test_time", "motor_UPDRS", "total_UPDRS", "Jitter(%)"]
    rows = rng.uniform(0, 1, (30, 7))
    rows[:, 2] = np.r_[np.zeros(12), np.ones(18)]
    p = _write(tmp_path / "park.csv", header, rows)
    d = load_dataset(p, "parkinsons_male_to_female")
    assert d.feature_names == ["age", "test_time", "Jitter(%)"]
    assert len(d.y_S) == 12 and d.target_name == "total_UPDRS"
    np.testing.assert_array_equal(d.y_S, rows[:12, 5])


def test_column_rule(tmp_path, rng):
    rows = rng.uniform(0, 10, (40, 3))
    p = _write(tmp_path / "x.csv", ["a", "b", "c"], rows)
    d = load_dataset(p, "column_rule", {"column": "a", "predicate": "< 5", "target": "c"})
    assert np.all(d.X_S[:, 0] < 5) and d.feature_names == ["a", "b"]
    d = load_dataset(p, "column_rule", {"column": "b", "predicate": ">= median", "target": "c",
                                        "drop_rule_column": True})
    assert d.feature_names == ["a"]
    with pytest.raises(DatasetError, match="parse"):
        load_dataset(p, "column_rule", {"column": "a", "predicate": "~ 3", "target": "c"})
    with pytest.raises(DatasetError, match="'zzz'"):
        load_dataset(p, "column_rule", {"column": "zzz", "predicate": "< 1", "target": "c"})
    with pytest.raises(DatasetError, match="empty"):
        load_dataset(p, "column_rule", {"column": "a", "predicate": "> 100", "target": "c"})
    with pytest.raises(DatasetError):
        load_dataset(p, "column_rule", None)


def test_unknown_split(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(tmp_path, "nope")


def test_constant_column_warns(tmp_path, rng, caplog):
    rows = rng.uniform(0, 10, (20, 3))
    rows[:, 1] = 4.0
    p = _write(tmp_path / "x.csv", ["a", "flat", "c"], rows)
    with caplog.at_level(logging.WARNING):
        load_dataset(p, "column_rule", {"column": "a", "predicate": "< median", "target": "c"})
    assert "'flat'" in caplog.text


def test_data_dir_env(monkeypatch, tmp_path):
    monkeypatch.setenv(DATA_ENV, str(tmp_path))
    assert data_dir() == tmp_path


def test_fetch_from_file_urls(tmp_path, rng):
    src = tmp_path / "remote"
    src.mkdir()
    (src / "air.dat").write_text("\n".join("\t".join(str(v) for v in r)
                                           for r in rng.uniform(size=(7, 6))) + "\n")
    _write(src / "red.csv", WINE_HEADER, rng.uniform(size=(4, 4)), sep=";")
    files = {"airfoil_self_noise.csv": ((src / "air.dat").as_uri(), 7),
             "winequality-red.csv": ((src / "red.csv").as_uri(), 4)}
    out = fetch(tmp_path / "cache", files)
    header, data = read_csv(out["airfoil_self_noise.csv"])
    assert header == list(AIRFOIL_COLUMNS) and data.shape == (7, 6)
    assert read_csv(out["winequality-red.csv"])[1].shape == (4, 4)
    with pytest.raises(DatasetError, match="expected 5 rows"):
        fetch(tmp_path / "cache", {"winequality-red.csv": ((src / "red.csv").as_uri(), 5)})
