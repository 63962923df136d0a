"""Dataset ingestion, the GLM preprocessing pipeline, and synthetic generators.

Preprocessing: one-hot expansion of categoricals (full k-column encoding),
per-feature min-max scaling to [-0.5, 0.5] fit on the training split only,
then L2 row normalization to exactly 1, so the achieved feature-norm bound
is c = 1.  The train/test split is a seeded permutation.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .glm import inv_link

__all__ = [
    "DatasetError",
    "TabularDataset",
    "PreprocessConfig",
    "GlmSplit",
    "load_schema",
    "load_csv",
    "parse_label_rule",
    "preprocess_glm",
    "synth_bernoulli",
    "synth_glm",
    "write_matrix_csv",
]

KINDS = ("numeric", "categorical", "label")


class DatasetError(ValueError):
    """Malformed input file or schema; message carries the location."""


@dataclass
class TabularDataset:
    name: str
    columns: list
    kinds: dict
    rows: list = field(default_factory=list)

    def __post_init__(self):
        unknown = [c for c in self.columns if self.kinds.get(c) not in KINDS]
        if unknown:
            raise DatasetError(f"columns with missing/unknown kind: {unknown}")
        labels = [c for c in self.columns if self.kinds[c] == "label"]
        if len(labels) != 1:
            raise DatasetError(f"need exactly one label column, got {labels}")
        self.label_column = labels[0]

    def __len__(self):
        return len(self.rows)


def load_schema(path):
    with open(path, encoding="utf-8") as fh:
        schema = json.load(fh)
    if not isinstance(schema, dict) or not schema:
        raise DatasetError(f"schema {path} must be a non-empty object of column kinds")
    return schema


def load_csv(path, schema, name=None):
    """Parse a CSV with header into a typed dataset.

    Numeric columns are parsed to float; parse failures and short/long rows
    raise DatasetError naming the 1-based file line.  A completely empty file
    yields an empty dataset with the schema's column order.
    """
    name = name or str(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return TabularDataset(name, list(schema), dict(schema))
        if set(header) != set(schema):
            raise DatasetError(
                f"{path}: header {header} does not match schema columns {sorted(schema)}"
            )
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if len(raw) != len(header):
                raise DatasetError(
                    f"{path}, line {lineno}: expected {len(header)} fields, got {len(raw)}"
                )
            row = {}
            for col, text in zip(header, raw):
                if schema[col] == "numeric":
                    try:
                        row[col] = float(text)
                    except ValueError:
                        raise DatasetError(
                            f"{path}, line {lineno}: column {col!r} is not numeric: {text!r}"
                        ) from None
                else:
                    row[col] = text
            rows.append(row)
    return TabularDataset(name, header, dict(schema), rows)


def _default_label_rule(value):
    v = float(value)
    if v not in (0.0, 1.0):
        raise DatasetError(f"label {value!r} is not 0/1; supply a label rule")
    return int(v)


def parse_label_rule(text):
    """Map a CLI/spec rule string (lt:<x>, ge:<x>, eq:<value>) to a predicate."""
    if text is None:
        return _default_label_rule
    op, _, arg = text.partition(":")
    if op == "lt":
        threshold = float(arg)
        return lambda v: int(float(v) < threshold)
    if op == "ge":
        threshold = float(arg)
        return lambda v: int(float(v) >= threshold)
    if op == "eq":
        return lambda v, a=arg: int(str(v) == a)
    raise ValueError(f"unknown label rule {text!r} (use lt:<x>, ge:<x>, or eq:<value>)")


@dataclass(frozen=True)
class PreprocessConfig:
    test_fraction: float = 1.0 / 3.0
    split_seed: int = 0
    label_rule: object = _default_label_rule

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test_fraction must lie in (0, 1), got {self.test_fraction!r}")


@dataclass
class GlmSplit:
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    c: float
    feature_names: list


def _expand(rows, columns, kinds, categories):
    blocks = []
    for col in columns:
        if kinds[col] == "label":
            continue
        if kinds[col] == "numeric":
            blocks.append(np.array([[row[col]] for row in rows]))
        else:
            levels = categories[col]
            block = np.zeros((len(rows), len(levels)))
            index = {lv: k for k, lv in enumerate(levels)}
            for i, row in enumerate(rows):
                k = index.get(row[col])
                if k is not None:  # unseen test category stays an all-zero block
                    block[i, k] = 1.0
            blocks.append(block)
    return np.hstack(blocks) if blocks else np.zeros((len(rows), 0))


def preprocess_glm(ds, cfg=PreprocessConfig()):
    """Split, one-hot, scale to [-0.5, 0.5] (train-fit), and unit-normalize rows."""
    if len(ds) == 0:
        raise DatasetError("cannot preprocess an empty dataset")
    rng = np.random.Generator(np.random.PCG64(cfg.split_seed))
    perm = rng.permutation(len(ds))
    n_test = min(len(ds) - 1, max(1, int(round(len(ds) * cfg.test_fraction))))
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    train_rows = [ds.rows[i] for i in train_idx]
    test_rows = [ds.rows[i] for i in test_idx]

    categories = {
        col: sorted({row[col] for row in train_rows})
        for col in ds.columns
        if ds.kinds[col] == "categorical"
    }
    feature_names = []
    for col in ds.columns:
        if ds.kinds[col] == "numeric":
            feature_names.append(col)
        elif ds.kinds[col] == "categorical":
            feature_names.extend(f"{col}={lv}" for lv in categories[col])

    raw_train = _expand(train_rows, ds.columns, ds.kinds, categories)
    raw_test = _expand(test_rows, ds.columns, ds.kinds, categories)

    mins = raw_train.min(axis=0)
    maxs = raw_train.max(axis=0)
    span = maxs - mins

    def scale(mat):
        out = np.zeros_like(mat)
        nz = span > 0  # constant features scale to 0
        out[:, nz] = (mat[:, nz] - mins[nz]) / span[nz] - 0.5
        return np.clip(out, -0.5, 0.5)

    def normalize(mat):
        norms = np.linalg.norm(mat, axis=1)
        if np.any(norms == 0.0):
            raise DatasetError("row with all-constant features cannot be unit-normalized")
        return mat / norms[:, None]

    train_y = np.array([float(cfg.label_rule(row[ds.label_column])) for row in train_rows])
    test_y = np.array([float(cfg.label_rule(row[ds.label_column])) for row in test_rows])
    if not np.all(np.isin(np.concatenate([train_y, test_y]), (0.0, 1.0))):
        raise DatasetError("label rule must map labels to {0, 1}")
    return GlmSplit(
        train_x=normalize(scale(raw_train)),
        train_y=train_y,
        test_x=normalize(scale(raw_test)),
        test_y=test_y,
        c=1.0,
        feature_names=feature_names,
    )


def synth_bernoulli(n, rho, seed):
    """n Bernoulli(rho) bits from a seeded stream; rho strictly inside (0, 1)."""
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie strictly inside (0, 1), got {rho!r}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n!r}")
    gen = np.random.Generator(np.random.PCG64(seed))
    return (gen.random(n) < rho).astype(int)


def synth_glm(n, d, w_true, link, seed):
    """Features uniform on the unit sphere (so c = 1), labels from the link."""
    w_true = np.asarray(w_true, dtype=float)
    if w_true.shape != (d,):
        raise ValueError(f"w_true must have shape ({d},), got {w_true.shape}")
    gen = np.random.Generator(np.random.PCG64(seed))
    x = gen.standard_normal((n, d))
    norms = np.linalg.norm(x, axis=1)
    while np.any(norms == 0.0):  # astronomically unlikely; redraw to keep rows on the sphere
        bad = norms == 0.0
        x[bad] = gen.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(x, axis=1)
    x /= norms[:, None]
    p = inv_link(link, x @ w_true)
    y = (gen.random(n) < p).astype(float)
    return x, y


def write_matrix_csv(path, x, y, feature_names):
    """Cache a preprocessed split as CSV (features then a final label column)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(feature_names) + ["label"])
        for row, label in zip(np.asarray(x), np.asarray(y)):
            writer.writerow([format(v, ".17g") for v in row] + [format(label, ".17g")])
