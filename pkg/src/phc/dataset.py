"""UCI-style CSV loading with sidecar JSON schemas.

A schema declares the kind of every column (numeric / categorical / label,
plus an ignore kind for identifier columns).  Loading is two-pass: the first
pass learns per-column min/max and categorical value sets from the file, the
second encodes every row into a vector in [0, 1].  True labels never enter
the feature vectors; they live in a separate Oracle object that the
unsupervised stage has no access to.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, DatasetUnavailable, SchemaError

log = logging.getLogger(__name__)

KIND_NUMERIC = "numeric"
KIND_CATEGORICAL = "categorical"
KIND_LABEL = "label"
KIND_IGNORE = "categorical-ignore"

_KINDS = {KIND_NUMERIC, KIND_CATEGORICAL, KIND_LABEL, KIND_IGNORE}

#: Datasets the comparison harness knows about, with the file names they are
#: searched under (the first name is what the bundled copies use, the second
#: is the original archive name).
TABLE1_DATASETS = ("iris", "wine", "zoo", "liver", "abalone")

_DATA_FILENAMES = {
    "iris": ("iris.csv", "iris.data"),
    "wine": ("wine.csv", "wine.data"),
    "zoo": ("zoo.csv", "zoo.data"),
    "liver": ("liver.csv", "bupa.data"),
    "abalone": ("abalone.csv", "abalone.data"),
}

BUNDLED_DIR = Path(__file__).parent / "data"

DATA_DIR_ENV = "PHC_DATA_DIR"


@dataclass(frozen=True)
class Column:
    name: str
    kind: str


@dataclass
class DatasetSchema:
    """Column declarations plus the statistics learned from one file."""

    columns: list[Column]
    has_header: bool = False
    # learned during load: column name -> (min, max) for numeric columns
    normalization: dict[str, tuple[float, float]] = field(default_factory=dict)
    # learned during load: column name -> sorted value set for categorical columns
    categories: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.columns:
            raise SchemaError("schema declares no columns")
        for col in self.columns:
            if col.kind not in _KINDS:
                raise SchemaError(f"column {col.name!r} has unknown kind {col.kind!r}")
        labels = [c for c in self.columns if c.kind == KIND_LABEL]
        if len(labels) != 1:
            raise SchemaError(
                f"schema must declare exactly one label column, found {len(labels)}"
            )

    @property
    def label_column(self) -> Column:
        return next(c for c in self.columns if c.kind == KIND_LABEL)

    def feature_dimension(self) -> int:
        dim = 0
        for col in self.columns:
            if col.kind == KIND_NUMERIC:
                dim += 1
            elif col.kind == KIND_CATEGORICAL:
                values = self.categories.get(col.name)
                if values is None:
                    raise SchemaError(
                        f"categorical column {col.name!r} has no learned value set yet"
                    )
                dim += len(values)
        return dim


@dataclass(frozen=True)
class DataRow:
    """One encoded data row: dense integer id plus its feature vector."""

    id: int
    features: np.ndarray


@dataclass(frozen=True)
class Oracle:
    """Ground-truth label store, kept apart from the rows themselves."""

    labels: dict[int, int]
    category_names: dict[int, str]

    def category_of(self, row_id: int) -> int:
        return self.labels[row_id]

    @property
    def n_categories(self) -> int:
        return len(self.category_names)


def read_schema(path) -> DatasetSchema:
    path = Path(path)
    if not path.exists():
        raise DatasetUnavailable(str(path), "schema file missing")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    try:
        columns = [Column(name=c["name"], kind=c["kind"]) for c in doc["columns"]]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{path}: every column needs 'name' and 'kind'") from exc
    return DatasetSchema(columns=columns, has_header=bool(doc.get("has_header", False)))


def _category_sort_key(value: str):
    # integer-looking labels sort numerically so e.g. ring counts line up
    try:
        return (0, int(value), value)
    except ValueError:
        return (1, 0, value)


def encode_row(raw: list[str], schema: DatasetSchema) -> np.ndarray:
    """Encode one raw CSV record into the feature vector.

    Numeric columns are min-max scaled to [0, 1] with the dataset-wide range
    stored on the schema; categorical columns become one-hot blocks over the
    learned value set (sorted order, so the layout does not depend on row
    order); label and ignored columns contribute nothing.
    """
    if len(raw) != len(schema.columns):
        raise DataError(
            f"row has {len(raw)} fields, schema declares {len(schema.columns)} columns"
        )
    parts: list[np.ndarray] = []
    for cell, col in zip(raw, schema.columns):
        cell = cell.strip()
        if col.kind == KIND_NUMERIC:
            try:
                value = float(cell)
            except ValueError:
                raise DataError(
                    f"non-numeric value {cell!r} in numeric column {col.name!r}"
                ) from None
            lo, hi = schema.normalization[col.name]
            if hi == lo:
                parts.append(np.zeros(1))
            else:
                parts.append(np.array([(value - lo) / (hi - lo)]))
        elif col.kind == KIND_CATEGORICAL:
            values = schema.categories[col.name]
            if cell not in values:
                raise DataError(
                    f"unknown value {cell!r} for categorical column {col.name!r}"
                )
            block = np.zeros(len(values))
            block[values.index(cell)] = 1.0
            parts.append(block)
        # label / ignored columns are excluded from features
    return np.concatenate(parts)


def load_dataset(path, schema_path) -> tuple[list[DataRow], Oracle, DatasetSchema]:
    """Load a CSV file under a schema into encoded rows plus a label oracle.

    Returns rows with dense ids in file order, an Oracle holding every row's
    true category, and the schema with its learned statistics filled in.
    Deterministic: identical inputs produce identical outputs.
    """
    schema = read_schema(schema_path)
    path = Path(path)
    if not path.exists():
        raise DatasetUnavailable(str(path), "data file missing")

    records: list[list[str]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, record in enumerate(reader, start=1):
            if schema.has_header and lineno == 1:
                continue
            if not record or all(not cell.strip() for cell in record):
                continue  # blank trailing lines are common in the archive files
            if len(record) != len(schema.columns):
                raise DataError(
                    f"{path}:{lineno}: expected {len(schema.columns)} fields, "
                    f"got {len(record)}"
                )
            records.append([cell.strip() for cell in record])

    if len(records) < 2:
        raise DataError(f"{path}: dataset needs at least 2 rows, got {len(records)}")

    # pass 1: learn normalization ranges, categorical value sets, label set
    for ci, col in enumerate(schema.columns):
        if col.kind == KIND_NUMERIC:
            values = []
            for record in records:
                try:
                    values.append(float(record[ci]))
                except ValueError:
                    raise DataError(
                        f"non-numeric value {record[ci]!r} in numeric "
                        f"column {col.name!r}"
                    ) from None
            lo, hi = min(values), max(values)
            if lo == hi:
                log.warning(
                    "column %r is constant (%g); its dimension encodes as 0",
                    col.name,
                    lo,
                )
            schema.normalization[col.name] = (lo, hi)
        elif col.kind == KIND_CATEGORICAL:
            schema.categories[col.name] = sorted(
                {record[ci] for record in records}, key=_category_sort_key
            )

    label_idx = schema.columns.index(schema.label_column)
    label_values = sorted(
        {record[label_idx] for record in records}, key=_category_sort_key
    )
    category_ids = {value: cid for cid, value in enumerate(label_values)}

    rows = [
        DataRow(id=rid, features=encode_row(record, schema))
        for rid, record in enumerate(records)
    ]
    oracle = Oracle(
        labels={rid: category_ids[records[rid][label_idx]] for rid in range(len(rows))},
        category_names={cid: value for value, cid in category_ids.items()},
    )
    return rows, oracle, schema


def data_search_dirs(explicit=None) -> list[Path]:
    """Directories searched for benchmark data, most specific first."""
    dirs = []
    if explicit:
        dirs.append(Path(explicit))
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        dirs.append(Path(env))
    dirs.append(BUNDLED_DIR)
    return dirs


def find_dataset(name: str, data_dir=None) -> tuple[Path, Path]:
    """Locate a named benchmark dataset's CSV and schema on the search path.

    The schema is taken from a ``<name>.schema.json`` sidecar next to the
    data file when present, otherwise from the bundled schema.
    """
    if name not in _DATA_FILENAMES:
        known = ", ".join(TABLE1_DATASETS)
        raise DatasetUnavailable(name, f"not a known dataset (known: {known})")
    for directory in data_search_dirs(data_dir):
        for filename in _DATA_FILENAMES[name]:
            candidate = directory / filename
            if candidate.exists():
                sidecar = directory / f"{name}.schema.json"
                if sidecar.exists():
                    return candidate, sidecar
                return candidate, BUNDLED_DIR / f"{name}.schema.json"
    searched = ", ".join(str(d) for d in data_search_dirs(data_dir))
    raise DatasetUnavailable(
        name,
        f"place {' or '.join(_DATA_FILENAMES[name])} in one of: {searched} "
        f"(the ${DATA_DIR_ENV} environment variable overrides the search path)",
    )
