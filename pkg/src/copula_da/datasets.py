"""CSV ingestion and the source/target domain splits used by the benchmark."""
from __future__ import annotations

import csv
import logging
import os
import re
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DatasetError

__all__ = [
    "DomainSplit",
    "SPLITS",
    "read_csv",
    "load_dataset",
    "data_dir",
    "fetch",
    "UCI_FILES",
]

logger = logging.getLogger(__name__)

SPLITS = (
    "wine_red_to_white",
    "airfoil_median_feature2",
    "parkinsons_male_to_female",
    "column_rule",
)

DATA_ENV = "COPULA_DA_DATA"

AIRFOIL_COLUMNS = (
    "frequency",
    "angle_of_attack",
    "chord_length",
    "free_stream_velocity",
    "suction_side_displacement_thickness",
    "scaled_sound_pressure_level",
)

_UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"
# file name -> (url, expected data rows)
UCI_FILES = {
    "winequality-red.csv": (f"{_UCI}/wine-quality/winequality-red.csv", 1599),
    "winequality-white.csv": (f"{_UCI}/wine-quality/winequality-white.csv", 4898),
    "airfoil_self_noise.csv": (f"{_UCI}/00291/airfoil_self_noise.dat", 1503),
    "parkinsons_updrs.csv": (f"{_UCI}/parkinsons/telemonitoring/parkinsons_updrs.data", 5875),
}


@dataclass
class DomainSplit:
    X_S: np.ndarray
    y_S: np.ndarray
    X_T: np.ndarray
    y_T: np.ndarray
    feature_names: list = field(default_factory=list)
    target_name: str = "y"

    def __iter__(self):
        return iter((self.X_S, self.y_S, self.X_T, self.y_T))


def data_dir() -> Path:
    """Dataset cache directory (``$COPULA_DA_DATA`` or ``~/.cache/copula_da``)."""
    return Path(os.environ.get(DATA_ENV, Path.home() / ".cache" / "copula_da"))


def _clean(name: str) -> str:
    return name.strip().strip('"').strip("'").strip()


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV with a header row; comma or semicolon delimited."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"{path}: no such file")
    with path.open(newline="", encoding="utf-8") as fh:
        text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DatasetError(f"{path}: file is empty")
    delimiter = ";" if lines[0].count(";") > lines[0].count(",") else ","
    rows = list(csv.reader(lines, delimiter=delimiter))
    header = [_clean(h) for h in rows[0]]
    data = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DatasetError(f"{path}:{i}: expected {len(header)} fields, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                data[i - 2, j] = float(_clean(cell))
            except ValueError:
                raise DatasetError(
                    f"{path}:{i}: non-numeric value {cell!r} in column {header[j]!r}") from None
    if not np.all(np.isfinite(data)):
        raise DatasetError(f"{path}: contains missing or non-finite values")
    return header, data


def _column(header, name, path) -> int:
    try:
        return header.index(name)
    except ValueError:
        raise DatasetError(f"{path}: missing column {name!r}") from None


def _features_and_target(header, data, target, drop, path):
    t = _column(header, target, path)
    dropped = {t} | {_column(header, d, path) for d in drop}
    keep = [j for j in range(len(header)) if j not in dropped]
    return data[:, keep], data[:, t], [header[j] for j in keep]


def _make_split(X, y, source_mask, names, target, path) -> DomainSplit:
    if not source_mask.any() or source_mask.all():
        raise DatasetError(f"{path}: split leaves one domain empty")
    split = DomainSplit(X[source_mask], y[source_mask], X[~source_mask], y[~source_mask],
                        feature_names=list(names), target_name=target)
    for which, X_dom in (("source", split.X_S), ("target", split.X_T)):
        for j, name in enumerate(names):
            if np.all(X_dom[:, j] == X_dom[0, j]):
                logger.warning("column %r is constant in the %s domain", name, which)
    return split


def _load_wine(path: Path) -> DomainSplit:
    target = "quality"
    if path.is_dir():
        h_red, d_red = read_csv(path / "winequality-red.csv")
        h_white, d_white = read_csv(path / "winequality-white.csv")
        if h_red != h_white:
            raise DatasetError(f"{path}: red and white files have different columns")
        X_r, y_r, names = _features_and_target(h_red, d_red, target, (), path)
        X_w, y_w, _ = _features_and_target(h_white, d_white, target, (), path)
        X = np.vstack([X_r, X_w])
        y = np.concatenate([y_r, y_w])
        mask = np.r_[np.ones(len(y_r), bool), np.zeros(len(y_w), bool)]
        return _make_split(X, y, mask, names, target, path)

    # single file with a colour indicator column (1 = red)
    header, data = read_csv(path)
    for flag in ("is_red", "red"):
        if flag in header:
            X, y, names = _features_and_target(header, data, target, (flag,), path)
            mask = data[:, header.index(flag)] == 1
            return _make_split(X, y, mask, names, target, path)
    raise DatasetError(
        f"{path}: expected a directory with winequality-red.csv and "
        "winequality-white.csv, or a CSV with an 'is_red' column")


def _load_airfoil(path: Path) -> DomainSplit:
    header, data = read_csv(path)
    target = header[-1]
    X, y, names = _features_and_target(header, data, target, (), path)
    if X.shape[1] < 2:
        raise DatasetError(f"{path}: airfoil split needs at least two features")
    second = X[:, 1]
    # rows tied with the median go to the target domain
    mask = second < np.median(second)
    return _make_split(X, y, mask, names, target, path)


def _load_parkinsons(path: Path) -> DomainSplit:
    header, data = read_csv(path)
    target = "total_UPDRS"
    sex = data[:, _column(header, "sex", path)]
    drop = [c for c in ("subject#", "sex", "motor_UPDRS") if c in header]
    X, y, names = _features_and_target(header, data, target, drop, path)
    return _make_split(X, y, sex == 0, names, target, path)


_RULE = re.compile(r"^\s*(<=|>=|==|!=|<|>)\s*(\S+)\s*$")
_OPS = {
    "<": np.less, "<=": np.less_equal, ">": np.greater,
    ">=": np.greater_equal, "==": np.equal, "!=": np.not_equal,
}


def _load_column_rule(path: Path, rule: dict) -> DomainSplit:
    try:
        column = rule["column"]
        predicate = rule["predicate"]
        target = rule["target"]
    except (KeyError, TypeError):
        raise DatasetError("column_rule needs 'column', 'predicate' and 'target'") from None
    m = _RULE.match(str(predicate))
    if m is None:
        raise DatasetError(f"cannot parse predicate {predicate!r}; use e.g. '< 3.5'")
    op, raw = m.groups()
    header, data = read_csv(path)
    col = data[:, _column(header, column, path)]
    value = float(np.median(col)) if raw == "median" else float(raw)
    drop = list(rule.get("drop", []))
    if rule.get("drop_rule_column", False) and column != target:
        drop.append(column)
    X, y, names = _features_and_target(header, data, target, drop, path)
    return _make_split(X, y, _OPS[op](col, value), names, target, path)


def load_dataset(path, split: str, rule: dict | None = None) -> DomainSplit:
    """
    Load a dataset and split it into a labelled source and a target domain.

    ``split`` is one of :data:`SPLITS`. ``column_rule`` puts rows satisfying
    ``rule['column'] <op> value`` in the source domain and predicts
    ``rule['target']``; ``value`` may be ``median``.
    """
    path = Path(path)
    if split == "wine_red_to_white":
        return _load_wine(path)
    if split == "airfoil_median_feature2":
        return _load_airfoil(path)
    if split == "parkinsons_male_to_female":
        return _load_parkinsons(path)
    if split == "column_rule":
        return _load_column_rule(path, rule or {})
    raise DatasetError(f"unknown split {split!r}; choose from {', '.join(SPLITS)}")


def _count_rows(path: Path) -> int:
    with path.open(encoding="utf-8") as fh:
        return sum(1 for ln in fh if ln.strip()) - 1


def fetch(dest=None, files=None) -> dict:
    """Download the UCI files into ``dest`` and verify their row counts.

    The airfoil file is whitespace separated without a header and is
    rewritten as a CSV with named columns.
    """
    dest = Path(dest) if dest is not None else data_dir()
    dest.mkdir(parents=True, exist_ok=True)
    files = files or UCI_FILES
    written = {}
    for name, (url, expected) in files.items():
        out = dest / name
        logger.info("downloading %s", url)
        with urllib.request.urlopen(url, timeout=60) as resp:
            raw = resp.read().decode("utf-8")
        if name.startswith("airfoil"):
            rows = [",".join(ln.split()) for ln in raw.splitlines() if ln.strip()]
            raw = ",".join(AIRFOIL_COLUMNS) + "\n" + "\n".join(rows) + "\n"
        out.write_text(raw, encoding="utf-8")
        count = _count_rows(out)
        if count != expected:
            raise DatasetError(f"{out}: expected {expected} rows, got {count}")
        written[name] = out
    return written
