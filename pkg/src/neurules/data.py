"""Dataset ingestion: CSV parsing, one-hot encoding, min-max scaling,
stratified folds.

A column is numeric iff every non-missing cell parses as a real number;
everything else is one-hot encoded into ``column=value`` indicator
features. Numeric features are min-max scaled to [0, 1] (the predicate
layer assumes this range) with the scaler stored per column so bounds can
be mapped back to original units. Rows with missing cells are dropped and
counted; constant columns are dropped with a warning.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

log = logging.getLogger("neurules")

MISSING = {"", "?", "na", "n/a", "nan", "null", "none"}


class DataError(ValueError):
    pass


@dataclass
class FeatureMeta:
    name: str                  # encoded column name
    kind: str                  # "numeric" | "onehot"
    source: str                # original CSV column
    category: str | None = None   # one-hot category value
    min: float = 0.0           # original-unit range for numeric columns
    max: float = 1.0

    def to_doc(self) -> dict:
        return {"name": self.name, "kind": self.kind, "source": self.source,
                "category": self.category, "min": self.min, "max": self.max}

    @classmethod
    def from_doc(cls, doc: dict) -> "FeatureMeta":
        return cls(**doc)


@dataclass
class Dataset:
    X: np.ndarray              # (n, d) scaled to [0, 1]
    y: np.ndarray              # (n,) class indices
    features: list[FeatureMeta]
    labels: list[str]          # class index -> original label value
    label_column: str = "label"
    n_dropped: int = 0

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    def subset(self, idx: np.ndarray) -> "Dataset":
        return replace(self, X=self.X[idx], y=self.y[idx], n_dropped=0)

    def observed_range(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-column min/max of the scaled features actually present."""
        return self.X.min(axis=0), self.X.max(axis=0)

    def original_units(self) -> np.ndarray:
        """Features mapped back to original units (one-hot stays 0/1)."""
        lo = np.array([f.min for f in self.features])
        hi = np.array([f.max for f in self.features])
        return lo + self.X * (hi - lo)


def _is_missing(cell: str) -> bool:
    return cell.strip().lower() in MISSING


def _parses_numeric(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def load_csv(path: str | Path, label_column: str) -> Dataset:
    """Read a headered CSV into a scaled, encoded Dataset."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        rows = [r for r in reader if r]
    header = [h.strip() for h in header]
    if label_column not in header:
        raise DataError(f"label column {label_column!r} not in header {header}")
    if any(len(r) != len(header) for r in rows):
        raise DataError(f"{path} has rows with inconsistent field counts")

    kept = [r for r in rows if not any(_is_missing(c) for c in r)]
    n_dropped = len(rows) - len(kept)
    if n_dropped:
        log.warning("dropped %d rows with missing cells from %s", n_dropped, path)
    if not kept:
        raise DataError(f"{path} has no usable rows")

    label_ix = header.index(label_column)
    label_values = sorted({r[label_ix].strip() for r in kept})
    label_map = {v: i for i, v in enumerate(label_values)}
    y = np.array([label_map[r[label_ix].strip()] for r in kept], dtype=int)

    columns: list[np.ndarray] = []
    meta: list[FeatureMeta] = []
    for ci, name in enumerate(header):
        if ci == label_ix:
            continue
        cells = [r[ci].strip() for r in kept]
        if all(_parses_numeric(c) for c in cells):
            vals = np.array([float(c) for c in cells])
            vmin, vmax = float(vals.min()), float(vals.max())
            if vmin == vmax:
                log.warning("dropping constant column %r", name)
                continue
            columns.append((vals - vmin) / (vmax - vmin))
            meta.append(FeatureMeta(name=name, kind="numeric", source=name,
                                    min=vmin, max=vmax))
        else:
            cats = sorted(set(cells))
            if len(cats) == 1:
                log.warning("dropping constant column %r", name)
                continue
            arr = np.array(cells)
            for cat in cats:
                columns.append((arr == cat).astype(float))
                meta.append(FeatureMeta(name=f"{name}={cat}", kind="onehot",
                                        source=name, category=cat))
    if not columns:
        raise DataError(f"{path} has no usable feature columns")
    X = np.column_stack(columns)
    return Dataset(X=X, y=y, features=meta, labels=label_values,
                   label_column=label_column, n_dropped=n_dropped)


def encode_with_meta(path: str | Path, features: list[FeatureMeta],
                     labels: list[str], label_column: str
                     ) -> tuple[np.ndarray, np.ndarray, int]:
    """Encode a CSV against an existing model's feature space.

    Returns original-unit encoded features (numeric columns unscaled,
    one-hot 0/1), label indices, and the dropped-row count. Used when
    evaluating a trained rule list on new data.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="") as f:
        reader = csv.reader(f)
        header = [h.strip() for h in next(reader)]
        rows = [r for r in reader if r]
    if label_column not in header:
        raise DataError(f"label column {label_column!r} not in header {header}")
    needed = {f.source for f in features}
    missing_cols = needed - set(header)
    if missing_cols:
        raise DataError(f"csv is missing feature columns: {sorted(missing_cols)}")

    kept = [r for r in rows if not any(_is_missing(c) for c in r)]
    n_dropped = len(rows) - len(kept)
    label_ix = header.index(label_column)
    label_map = {v: i for i, v in enumerate(labels)}
    y = []
    for r in kept:
        val = r[label_ix].strip()
        if val not in label_map:
            raise DataError(f"unknown label value {val!r}; model labels are {labels}")
        y.append(label_map[val])

    col_ix = {name: header.index(name) for name in needed}
    X = np.empty((len(kept), len(features)))
    for j, fm in enumerate(features):
        cells = [r[col_ix[fm.source]].strip() for r in kept]
        if fm.kind == "numeric":
            try:
                X[:, j] = [float(c) for c in cells]
            except ValueError as e:
                raise DataError(f"non-numeric value in column {fm.source!r}: {e}")
        else:
            X[:, j] = [1.0 if c == fm.category else 0.0 for c in cells]
    return X, np.array(y, dtype=int), n_dropped


def stratified_kfold(ds: Dataset, folds: int, seed: int
                     ) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded stratified partitions: list of (train_idx, test_idx)."""
    if folds < 2:
        raise DataError("need at least 2 folds")
    rng = np.random.default_rng(seed & 0xFFFFFFFF)
    assignment = np.empty(ds.n_samples, dtype=int)
    for cls in range(ds.n_classes):
        members = np.flatnonzero(ds.y == cls)
        if members.size and members.size < folds:
            raise DataError(
                f"class {ds.labels[cls]!r} has {members.size} members, fewer than {folds} folds")
        rng.shuffle(members)
        assignment[members] = np.arange(members.size) % folds
    out = []
    for f in range(folds):
        test = np.flatnonzero(assignment == f)
        train = np.flatnonzero(assignment != f)
        out.append((train, test))
    return out
