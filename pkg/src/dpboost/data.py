"""Loading raw tables and encoding them as Boolean datasets.

Encoding is driven entirely by an :class:`EncodingSchema` that is written
from column metadata, never from the private values, so binarizing a dataset
spends no privacy budget.

Schema files are JSON::

    {"columns": [{"name": "job", "kind": "categorical",
                  "categories": ["a", "b", "missing"], "other": false},
                 {"name": "age", "kind": "numeric",
                  "bins": [{"low": null, "high": 17,
                            "low_closed": false, "high_closed": true}, ...]},
                 {"name": "smoker", "kind": "boolean"}],
     "label": {"column": "income", "positive": ">50K"}}
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import RngStream

MISSING_TOKENS = frozenset({"", "?", "NA", "NaN", "nan"})
MISSING_CATEGORY = "missing"
OTHER_CATEGORY = "other"
KINDS = ("categorical", "numeric", "boolean")


class DataError(ValueError):
    """Malformed input data or schema."""


# -- raw tables ----------------------------------------------------------------

@dataclass(frozen=True)
class Column:
    name: str
    kind: str


@dataclass(frozen=True)
class RawDataset:
    """A parsed table; missing cells are ``None``."""

    columns: tuple[Column, ...]
    rows: tuple[tuple[str | None, ...], ...]
    label_column: str

    @property
    def feature_columns(self) -> list[Column]:
        return [c for c in self.columns if c.name != self.label_column]

    def column_values(self, name: str) -> list[str | None]:
        j = [c.name for c in self.columns].index(name)
        return [row[j] for row in self.rows]

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)


def _is_number(s: str) -> bool:
    try:
        return math.isfinite(float(s))
    except ValueError:
        return False


def _infer_kind(values) -> str:
    present = [v for v in values if v is not None]
    if present and all(v in ("0", "1") for v in present):
        return "boolean"
    if all(_is_number(v) for v in present):
        return "numeric"
    return "categorical"


def _clean(cell: str) -> str | None:
    cell = cell.strip()
    return None if cell in MISSING_TOKENS else cell


def _read_csv(path: Path, label_column: str | None, require_label: bool = True) -> RawDataset:
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        except csv.Error as exc:
            raise DataError(f"{path}:1: {exc}") from None
        if len(set(header)) != len(header):
            raise DataError(f"{path}:1: duplicate column names")
        rows = []
        try:
            for row in reader:
                if not row:
                    continue
                if len(row) != len(header):
                    raise DataError(
                        f"{path}:{reader.line_num}: expected {len(header)} fields, got {len(row)}"
                    )
                rows.append(tuple(_clean(c) for c in row))
        except csv.Error as exc:
            raise DataError(f"{path}:{reader.line_num}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    label = label_column or header[-1]
    if label not in header and require_label:
        raise DataError(f"{path}: label column {label!r} not in header")
    columns = tuple(
        Column(name, "categorical" if name == label else _infer_kind(r[j] for r in rows))
        for j, name in enumerate(header)
    )
    return RawDataset(columns, tuple(rows), label)


def _read_libsvm(path: Path) -> RawDataset:
    labels, records, max_index = [], [], 0
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            rec = {}
            for tok in parts[1:]:
                idx, sep, val = tok.partition(":")
                if not sep or not idx.isdigit() or int(idx) < 1 or not _is_number(val):
                    raise DataError(f"{path}:{lineno}: bad feature token {tok!r}")
                rec[int(idx)] = val
            if not _is_number(parts[0]):
                raise DataError(f"{path}:{lineno}: bad label {parts[0]!r}")
            labels.append(parts[0])
            records.append(rec)
            max_index = max(max_index, max(rec, default=0))
    if not records:
        raise DataError(f"{path}: empty file")
    names = [f"x{j}" for j in range(1, max_index + 1)]
    rows = tuple(
        tuple(_normalize_number(rec.get(j, "0")) for j in range(1, max_index + 1)) + (lab,)
        for rec, lab in zip(records, labels)
    )
    columns = tuple(
        Column(name, _infer_kind(r[j] for r in rows)) for j, name in enumerate(names)
    ) + (Column("label", "categorical"),)
    return RawDataset(columns, rows, "label")


def _normalize_number(v: str) -> str:
    f = float(v)
    return str(int(f)) if f.is_integer() else v


def load_dataset(path, format: str = "csv", label_column: str | None = None,
                 require_label: bool = True) -> RawDataset:
    """Parse a CSV (header row, label last by default) or LIBSVM file.

    With ``require_label=False`` a CSV may omit the named label column.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    if format == "csv":
        raw = _read_csv(path, label_column, require_label)
    elif format == "libsvm":
        raw = _read_libsvm(path)
    else:
        raise DataError(f"unknown format {format!r}")
    if not raw.has_column(raw.label_column):
        return raw
    classes = {v for v in raw.column_values(raw.label_column) if v is not None}
    if len(classes) > 2:
        raise DataError(f"{path}: label has {len(classes)} classes, expected 2")
    return raw


# -- schema ----------------------------------------------------------------------

def _fmt(v: float) -> str:
    return f"{v:g}"


@dataclass(frozen=True)
class Bin:
    """Interval with optional open ends (``None`` means unbounded)."""

    low: float | None = None
    high: float | None = None
    low_closed: bool = False
    high_closed: bool = True

    def __post_init__(self):
        lo = -math.inf if self.low is None else self.low
        hi = math.inf if self.high is None else self.high
        if lo > hi or (lo == hi and not (self.low_closed and self.high_closed)):
            raise DataError(f"empty bin {self}")

    def contains(self, v: float) -> bool:
        if self.low is not None and (v < self.low or (v == self.low and not self.low_closed)):
            return False
        if self.high is not None and (v > self.high or (v == self.high and not self.high_closed)):
            return False
        return True

    def label(self, name: str) -> str:
        lo_op = "<=" if self.low_closed else "<"
        hi_op = "<=" if self.high_closed else "<"
        if self.low is None and self.high is None:
            return f"{name} (any)"
        if self.low is None:
            return f"{name} {hi_op} {_fmt(self.high)}"
        if self.high is None:
            return f"{name} {'>=' if self.low_closed else '>'} {_fmt(self.low)}"
        if self.low == self.high:
            return f"{name} = {_fmt(self.low)}"
        return f"{_fmt(self.low)} {lo_op} {name} {hi_op} {_fmt(self.high)}"

    def to_json(self) -> dict:
        return {"low": self.low, "high": self.high,
                "low_closed": self.low_closed, "high_closed": self.high_closed}


def _overlap(a: Bin, b: Bin) -> bool:
    a_lo = -math.inf if a.low is None else a.low
    a_hi = math.inf if a.high is None else a.high
    b_lo = -math.inf if b.low is None else b.low
    b_hi = math.inf if b.high is None else b.high
    if a_hi < b_lo or b_hi < a_lo:
        return False
    if a_hi == b_lo:
        return a.high_closed and b.low_closed
    if b_hi == a_lo:
        return b.high_closed and a.low_closed
    return True


def propose_equal_width_bins(low: float, high: float, k: int) -> list[Bin]:
    """``k`` equal-width bins over a publicly known range, open at both ends."""
    if k < 1 or not low < high:
        raise DataError("need k >= 1 and low < high")
    edges = np.linspace(low, high, k + 1)
    edges = [float(round(e, 10)) for e in edges]
    if k == 1:
        return [Bin(None, None)]
    bins = [Bin(None, edges[1])]
    bins += [Bin(edges[i], edges[i + 1]) for i in range(1, k - 1)]
    bins.append(Bin(edges[k - 1], None))
    return bins


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    categories: tuple[str, ...] = ()
    bins: tuple[Bin, ...] = ()
    other: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "categorical":
            if not self.categories:
                raise DataError(f"column {self.name!r}: categorical column needs categories")
            if len(set(self.categories)) != len(self.categories):
                raise DataError(f"column {self.name!r}: duplicate categories")
        if self.kind == "numeric":
            if not self.bins:
                raise DataError(f"column {self.name!r}: numeric column needs bins")
            for i, a in enumerate(self.bins):
                for b in self.bins[i + 1:]:
                    if _overlap(a, b):
                        raise DataError(f"column {self.name!r}: overlapping bins {a} and {b}")

    def feature_names(self) -> list[str]:
        if self.kind == "categorical":
            cats = list(self.categories) + ([OTHER_CATEGORY] if self.other else [])
            return [f"{self.name} : {c}" for c in cats]
        if self.kind == "numeric":
            return [b.label(self.name) for b in self.bins]
        return [self.name]

    def to_json(self) -> dict:
        out = {"name": self.name, "kind": self.kind}
        if self.kind == "categorical":
            out["categories"] = list(self.categories)
            out["other"] = self.other
        elif self.kind == "numeric":
            out["bins"] = [b.to_json() for b in self.bins]
        return out


@dataclass(frozen=True)
class EncodingSchema:
    columns: tuple[ColumnSpec, ...]
    label_column: str
    positive: str | None = None

    @property
    def n_features(self) -> int:
        return sum(len(c.feature_names()) for c in self.columns)

    def feature_names(self) -> list[str]:
        return [name for c in self.columns for name in c.feature_names()]

    def to_json(self) -> dict:
        return {"columns": [c.to_json() for c in self.columns],
                "label": {"column": self.label_column, "positive": self.positive}}

    @classmethod
    def from_json(cls, obj: dict) -> "EncodingSchema":
        try:
            cols = []
            for c in obj["columns"]:
                bins = tuple(
                    Bin(b.get("low"), b.get("high"),
                        bool(b.get("low_closed", False)), bool(b.get("high_closed", True)))
                    for b in c.get("bins", ())
                )
                cols.append(ColumnSpec(
                    name=c["name"], kind=c["kind"],
                    categories=tuple(str(v) for v in c.get("categories", ())),
                    bins=bins, other=bool(c.get("other", False)),
                ))
            label = obj["label"]
            positive = label.get("positive")
            return cls(tuple(cols), label["column"], None if positive is None else str(positive))
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed schema: {exc!r}") from None


def load_schema(path) -> EncodingSchema:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: cannot read schema: {exc}") from None
    return EncodingSchema.from_json(obj)


def save_schema(schema: EncodingSchema, path) -> None:
    Path(path).write_text(json.dumps(schema.to_json(), indent=2) + "\n")


def boolean_schema(raw: RawDataset, positive: str | None = None) -> EncodingSchema:
    """Pass-through schema for tables whose feature columns are all Boolean."""
    bad = [c.name for c in raw.feature_columns if c.kind != "boolean"]
    if bad:
        raise DataError(f"a schema is required for non-Boolean columns: {', '.join(bad[:5])}")
    cols = tuple(ColumnSpec(c.name, "boolean") for c in raw.feature_columns)
    return EncodingSchema(cols, raw.label_column, positive)


# -- Boolean datasets ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BooleanDataset:
    """``n`` examples over ``r`` Boolean features with labels in {+1, -1}."""

    x: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] = field(default=())
    _xf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.uint8)
        y = np.asarray(self.y, dtype=np.int8)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise DataError(f"shape mismatch: x {x.shape}, y {y.shape}")
        if np.any(x > 1):
            raise DataError("feature values must be 0 or 1")
        if np.any((y != 1) & (y != -1)):
            raise DataError("labels must be +1 or -1")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(x.shape[1]))
        if len(names) != x.shape[1] or len(set(names)) != len(names):
            raise DataError("feature names must be unique, one per column")
        x.setflags(write=False)
        y.setflags(write=False)
        xf = x.astype(np.float64)
        xf.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "_xf", xf)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def r(self) -> int:
        return self.x.shape[1]

    @property
    def xf(self) -> np.ndarray:
        """Feature matrix as float64, cached for matrix products."""
        return self._xf

    def subset(self, idx) -> "BooleanDataset":
        idx = np.asarray(idx)
        return BooleanDataset(self.x[idx], self.y[idx], self.feature_names)

    def with_record(self, i: int, x_row, y_val: int) -> "BooleanDataset":
        """Neighbouring dataset with record ``i`` replaced."""
        x = self.x.copy()
        y = self.y.copy()
        x[i] = x_row
        y[i] = y_val
        return BooleanDataset(x, y, self.feature_names)


def differing_records(a: BooleanDataset, b: BooleanDataset) -> int:
    if a.x.shape != b.x.shape:
        raise DataError("datasets have different shapes")
    return int(np.sum(np.any(a.x != b.x, axis=1) | (a.y != b.y)))


def _label_mapping(values, positive: str | None) -> dict[str, int]:
    classes = sorted({v for v in values if v is not None})
    if positive is not None:
        negatives = [c for c in classes if c != positive]
        if len(negatives) > 1:
            raise DataError(f"label has classes {classes}; expected one besides {positive!r}")
        return {positive: 1, **{c: -1 for c in negatives}}
    if len(classes) != 2:
        raise DataError(
            f"cannot infer label mapping from classes {classes}; set label.positive in the schema"
        )
    if all(_is_number(c) for c in classes):
        classes.sort(key=float)
    return {classes[0]: -1, classes[1]: 1}


def one_hot_encode(raw: RawDataset, schema: EncodingSchema,
                   require_label: bool = True) -> BooleanDataset:
    """Binarize ``raw`` column by column as laid out in ``schema``.

    Unlabeled data is accepted with ``require_label=False``; every label is
    then set to +1 and only the features are meaningful.
    """
    n = len(raw.rows)
    blocks = []
    for spec in schema.columns:
        if not raw.has_column(spec.name):
            raise DataError(f"schema column {spec.name!r} not present in data")
        values = raw.column_values(spec.name)
        if spec.kind == "categorical":
            cats = list(spec.categories) + ([OTHER_CATEGORY] if spec.other else [])
            pos = {c: j for j, c in enumerate(cats)}
            block = np.zeros((n, len(cats)), dtype=np.uint8)
            for i, v in enumerate(values):
                key = MISSING_CATEGORY if v is None else v
                j = pos.get(key)
                if j is None:
                    if not spec.other:
                        raise DataError(
                            f"row {i + 1}: value {key!r} of column {spec.name!r} not in schema"
                        )
                    j = pos[OTHER_CATEGORY]
                block[i, j] = 1
        elif spec.kind == "numeric":
            block = np.zeros((n, len(spec.bins)), dtype=np.uint8)
            for i, v in enumerate(values):
                if v is None:
                    continue
                if not _is_number(v):
                    raise DataError(f"row {i + 1}: non-numeric value {v!r} in column {spec.name!r}")
                f = float(v)
                hit = [j for j, b in enumerate(spec.bins) if b.contains(f)]
                if not hit:
                    raise DataError(f"row {i + 1}: {spec.name}={v} falls outside every bin")
                block[i, hit[0]] = 1
        else:
            block = np.zeros((n, 1), dtype=np.uint8)
            for i, v in enumerate(values):
                if v is None:
                    continue
                if v.lower() in ("1", "true", "yes"):
                    block[i, 0] = 1
                elif v.lower() not in ("0", "false", "no"):
                    raise DataError(f"row {i + 1}: non-Boolean value {v!r} in column {spec.name!r}")
        blocks.append(block)
    x = np.hstack(blocks) if blocks else np.zeros((n, 0), dtype=np.uint8)

    if not raw.has_column(schema.label_column):
        if not require_label:
            return BooleanDataset(x, np.ones(n, dtype=np.int8), tuple(schema.feature_names()))
        raise DataError(f"label column {schema.label_column!r} not present in data")
    labels = raw.column_values(schema.label_column)
    if any(v is None for v in labels):
        raise DataError("missing label value")
    mapping = _label_mapping(labels, schema.positive)
    y = np.array([mapping[v] for v in labels], dtype=np.int8)
    return BooleanDataset(x, y, tuple(schema.feature_names()))


def make_folds(ds, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Shuffled ``k``-fold split into (train indices, validation indices)."""
    n = ds if isinstance(ds, int) else ds.n
    if k < 2:
        raise ValueError("need at least 2 folds")
    if k > n:
        raise ValueError(f"cannot split {n} examples into {k} folds")
    perm = RngStream(seed, 0xF01D).generator.permutation(n)
    folds = np.array_split(perm, k)
    out = []
    for j in range(k):
        val = np.sort(folds[j])
        train = np.sort(np.concatenate([folds[i] for i in range(k) if i != j]))
        out.append((train, val))
    return out
