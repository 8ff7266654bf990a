"""Datasets: in-memory representation, ARFF/CSV loading and the dataset registry.

A :class:`Dataset` stores attribute values in a float matrix. Nominal values
are stored as indices into the attribute's declared value list, and missing
values are NaN. Class labels are indices into ``Dataset.classes``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)


class DataFormatError(ValueError):
    """A data file could not be parsed; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        self.path = path
        where = [str(path)] if path is not None else []
        if line is not None:
            where.append(f"line {line}")
        super().__init__(": ".join(where + [message]))


@dataclass(frozen=True)
class Attribute:
    """One input attribute. ``values`` is None for numeric attributes."""

    name: str
    values: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.values is not None:
            values = tuple(self.values)
            if not values:
                raise ValueError(f"nominal attribute {self.name!r} has no values")
            if len(set(values)) != len(values):
                raise ValueError(f"nominal attribute {self.name!r} has duplicate values")
            object.__setattr__(self, "values", values)

    @property
    def is_nominal(self) -> bool:
        return self.values is not None

    @classmethod
    def numeric(cls, name: str) -> "Attribute":
        return cls(name, None)

    @classmethod
    def nominal(cls, name: str, values: Sequence[str]) -> "Attribute":
        return cls(name, tuple(values))


@dataclass(frozen=True)
class Instance:
    values: np.ndarray
    label: int
    weight: float = 1.0


@dataclass(frozen=True, eq=False)
class Dataset:
    """Attribute matrix, class indices and per-instance weights."""

    attributes: tuple[Attribute, ...]
    classes: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    weights: np.ndarray = None
    relation: str = "data"
    class_name: str = "class"

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        y = np.array(self.y, dtype=np.intp)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if len(self.attributes) == 1 else X.reshape(len(y), -1)
        n = len(y)
        w = np.ones(n) if self.weights is None else np.array(self.weights, dtype=np.float64)
        attributes = tuple(self.attributes)
        classes = tuple(self.classes)
        if n < 1:
            raise ValueError("a dataset needs at least one instance")
        if len(classes) < 2:
            raise ValueError("a dataset needs at least two classes")
        if X.shape != (n, len(attributes)):
            raise ValueError(f"value matrix has shape {X.shape}, expected ({n}, {len(attributes)})")
        if w.shape != (n,) or np.any(w < 0) or not np.all(np.isfinite(w)) or w.sum() <= 0:
            raise ValueError("weights must be non-negative with a positive sum, one per instance")
        if np.any(y < 0) or np.any(y >= len(classes)):
            raise ValueError("class index out of range")
        for j, attr in enumerate(attributes):
            col = X[:, j]
            present = col[~np.isnan(col)]
            if attr.is_nominal:
                if np.any(present != np.floor(present)) or np.any(present < 0) or np.any(present >= len(attr.values)):
                    raise ValueError(f"attribute {attr.name!r} holds an invalid nominal index")
            elif np.any(np.isinf(present)):
                raise ValueError(f"attribute {attr.name!r} holds an infinite value")
        for arr in (X, y, w):
            arr.setflags(write=False)
        object.__setattr__(self, "attributes", attributes)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "weights", w)

    @property
    def n_instances(self) -> int:
        return len(self.y)

    @property
    def n_attributes(self) -> int:
        return len(self.attributes)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def __len__(self) -> int:
        return len(self.y)

    def instance(self, i: int) -> Instance:
        return Instance(self.X[i], int(self.y[i]), float(self.weights[i]))

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return Dataset(
            self.attributes, self.classes, self.X[index], self.y[index], self.weights[index],
            relation=self.relation, class_name=self.class_name,
        )

    def with_weights(self, weights) -> "Dataset":
        return Dataset(self.attributes, self.classes, self.X, self.y, weights,
                       relation=self.relation, class_name=self.class_name)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.n_classes)

    def majority_class(self) -> int:
        return int(np.argmax(np.bincount(self.y, weights=self.weights, minlength=self.n_classes)))

    def same_as(self, other: "Dataset") -> bool:
        """Structural equality: schema, labels, values and missing flags."""
        return (
            self.attributes == other.attributes
            and self.classes == other.classes
            and self.class_name == other.class_name
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.X, other.X, equal_nan=True)
        )


# ---------------------------------------------------------------------------
# ARFF

_KEYWORD = re.compile(r"@(relation|attribute|data)\b", re.IGNORECASE)
_NUMERIC_TYPES = {"numeric", "real", "integer"}


def _split_fields(text: str, line_no: int, path) -> list[str]:
    try:
        row = next(csv.reader([text], skipinitialspace=True, quotechar="'"))
    except (csv.Error, StopIteration) as exc:
        raise DataFormatError(f"cannot split {text!r}: {exc}", line_no, path) from None
    fields = []
    for cell in row:
        cell = cell.strip()
        if len(cell) >= 2 and cell[0] == cell[-1] == '"':
            cell = cell[1:-1]
        fields.append(cell)
    return fields


def _parse_name(rest: str, line_no: int, path) -> tuple[str, str]:
    rest = rest.strip()
    if not rest:
        raise DataFormatError("missing name", line_no, path)
    if rest[0] in "'\"":
        quote = rest[0]
        i = 1
        chars = []
        while i < len(rest):
            if rest[i] == quote:
                if rest[i + 1:i + 2] == quote:
                    chars.append(quote)
                    i += 2
                    continue
                return "".join(chars), rest[i + 1:].strip()
            chars.append(rest[i])
            i += 1
        raise DataFormatError("unterminated quoted name", line_no, path)
    parts = rest.split(None, 1)
    return parts[0], parts[1].strip() if len(parts) > 1 else ""


def _parse_attribute(rest: str, line_no: int, path) -> Attribute:
    name, kind = _parse_name(rest, line_no, path)
    if kind.startswith("{"):
        if not kind.endswith("}"):
            raise DataFormatError(f"unterminated nominal value list for {name!r}", line_no, path)
        values = _split_fields(kind[1:-1], line_no, path)
        if not values or any(v == "" for v in values):
            raise DataFormatError(f"empty nominal value in {name!r}", line_no, path)
        try:
            return Attribute.nominal(name, values)
        except ValueError as exc:
            raise DataFormatError(str(exc), line_no, path) from None
    if kind.lower() in _NUMERIC_TYPES:
        return Attribute.numeric(name)
    raise DataFormatError(f"unsupported attribute type {kind!r} for {name!r}", line_no, path)


def _pick_class(attributes: list[Attribute], class_attribute, line_no, path) -> int:
    if class_attribute is not None:
        if isinstance(class_attribute, int):
            idx = class_attribute if class_attribute >= 0 else len(attributes) + class_attribute
        else:
            names = [a.name for a in attributes]
            if class_attribute not in names:
                raise DataFormatError(f"no attribute named {class_attribute!r}", line_no, path)
            idx = names.index(class_attribute)
    else:
        named = [i for i, a in enumerate(attributes) if a.name.lower() == "class" and a.is_nominal]
        nominal = [i for i, a in enumerate(attributes) if a.is_nominal]
        if named:
            idx = named[0]
        elif nominal:
            idx = nominal[-1]
        else:
            raise DataFormatError("no nominal attribute to use as the class", line_no, path)
    if not 0 <= idx < len(attributes) or not attributes[idx].is_nominal:
        raise DataFormatError("the class attribute must be nominal", line_no, path)
    return idx


def parse_arff(text: str, path=None, class_attribute: str | int | None = None) -> Dataset:
    """Parse ARFF text (dense format; numeric and nominal attributes only).

    The class is ``class_attribute`` when given, else a nominal attribute
    called "class", else the last nominal attribute. Rows with a missing class
    are dropped and counted in a warning.
    """
    relation = "data"
    attributes: list[Attribute] = []
    rows: list[tuple[int, list[str]]] = []
    in_data = False
    data_line = None
    for line_no, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if not in_data:
            m = _KEYWORD.match(line)
            if not m:
                raise DataFormatError(f"unexpected line {line!r}", line_no, path)
            keyword, rest = m.group(1).lower(), line[m.end():]
            if keyword == "relation":
                relation = _parse_name(rest, line_no, path)[0]
            elif keyword == "attribute":
                attributes.append(_parse_attribute(rest, line_no, path))
            else:
                in_data = True
                data_line = line_no
            continue
        if line.startswith("{"):
            raise DataFormatError("sparse ARFF rows are not supported", line_no, path)
        rows.append((line_no, _split_fields(line, line_no, path)))

    if not in_data:
        raise DataFormatError("no @data section", None, path)
    if not attributes:
        raise DataFormatError("no attributes declared", data_line, path)
    cls = _pick_class(attributes, class_attribute, data_line, path)
    lookups = [None if a.values is None else {v: i for i, v in enumerate(a.values)} for a in attributes]

    X = np.empty((len(rows), len(attributes) - 1))
    y = np.empty(len(rows), dtype=np.intp)
    kept = 0
    dropped = 0
    for line_no, fields in rows:
        if len(fields) != len(attributes):
            raise DataFormatError(f"expected {len(attributes)} values, found {len(fields)}", line_no, path)
        out = 0
        values = np.empty(len(attributes) - 1)
        label = None
        for j, (cell, lookup) in enumerate(zip(fields, lookups)):
            if cell == "?":
                value = math.nan
            elif lookup is None:
                try:
                    value = float(cell)
                except ValueError:
                    raise DataFormatError(
                        f"non-numeric value {cell!r} for attribute {attributes[j].name!r}", line_no, path
                    ) from None
            else:
                if cell not in lookup:
                    raise DataFormatError(
                        f"undeclared value {cell!r} for attribute {attributes[j].name!r}", line_no, path
                    )
                value = float(lookup[cell])
            if j == cls:
                label = value
            else:
                values[out] = value
                out += 1
        if math.isnan(label):
            dropped += 1
            continue
        X[kept] = values
        y[kept] = int(label)
        kept += 1
    if dropped:
        log.warning("%s: dropped %d rows with a missing class label", path or relation, dropped)
    if kept == 0:
        raise DataFormatError("no labelled data rows", data_line, path)
    schema = tuple(a for j, a in enumerate(attributes) if j != cls)
    return Dataset(schema, attributes[cls].values, X[:kept], y[:kept],
                   relation=relation, class_name=attributes[cls].name)


def load_arff(path, class_attribute: str | int | None = None) -> Dataset:
    path = Path(path)
    return parse_arff(path.read_text(), path=path, class_attribute=class_attribute)


def _quote(name: str) -> str:
    if re.search(r"[\s,{}'\"%]", name) or name == "?":
        return "'" + name.replace("'", "''") + "'"
    return name


def dumps_arff(data: Dataset) -> str:
    """Render a dataset as ARFF; the class is written as the last attribute."""
    out = [f"@relation {_quote(data.relation)}", ""]
    for attr in data.attributes:
        kind = "numeric" if attr.values is None else "{" + ",".join(_quote(v) for v in attr.values) + "}"
        out.append(f"@attribute {_quote(attr.name)} {kind}")
    out.append(f"@attribute {_quote(data.class_name)} {{{','.join(_quote(c) for c in data.classes)}}}")
    out += ["", "@data"]
    for row, label in zip(data.X, data.y):
        cells = []
        for attr, value in zip(data.attributes, row):
            if math.isnan(value):
                cells.append("?")
            elif attr.values is not None:
                cells.append(_quote(attr.values[int(value)]))
            else:
                cells.append(repr(float(value)))
        cells.append(_quote(data.classes[label]))
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def save_arff(data: Dataset, path) -> None:
    Path(path).write_text(dumps_arff(data))


# ---------------------------------------------------------------------------
# CSV


def _is_number(text: str) -> bool:
    try:
        return math.isfinite(float(text))
    except ValueError:
        return False


def load_csv(path, class_column: str | int = -1, nominal_columns: Sequence[str | int] = ()) -> Dataset:
    """Load a headed, comma-separated file.

    A column is numeric when every non-empty cell parses as a number, nominal
    otherwise (values in order of first appearance). Empty cells are missing.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError("empty file", 1, path) from None
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(f"expected {len(header)} fields, found {len(row)}", line_no, path)
            rows.append((line_no, [c.strip() for c in row]))
    if not rows:
        raise DataFormatError("no data rows", None, path)

    def column_index(key) -> int:
        if isinstance(key, int) or (isinstance(key, str) and key.lstrip("-").isdigit() and key not in header):
            idx = int(key)
            idx = idx if idx >= 0 else len(header) + idx
            if not 0 <= idx < len(header):
                raise DataFormatError(f"column index {key} out of range", 1, path)
            return idx
        if key not in header:
            raise DataFormatError(f"no column named {key!r}", 1, path)
        return header.index(key)

    cls = column_index(class_column)
    forced = {column_index(c) for c in nominal_columns}
    kept_rows = [(ln, r) for ln, r in rows if r[cls] != ""]
    if len(kept_rows) < len(rows):
        log.warning("%s: dropped %d rows with a missing class label", path, len(rows) - len(kept_rows))
    if not kept_rows:
        raise DataFormatError("no labelled data rows", None, path)

    attributes = []
    columns = []
    for j, name in enumerate(header):
        cells = [r[j] for _, r in kept_rows]
        present = [c for c in cells if c != ""]
        if j != cls and j not in forced and all(_is_number(c) for c in present):
            attr = Attribute.numeric(name)
            col = np.array([float(c) if c != "" else math.nan for c in cells])
        else:
            values = list(dict.fromkeys(present))
            if not values:
                values = ["?missing"]
            attr = Attribute.nominal(name, values)
            lookup = {v: i for i, v in enumerate(values)}
            col = np.array([lookup[c] if c != "" else math.nan for c in cells], dtype=np.float64)
        attributes.append(attr)
        columns.append(col)
    classes = attributes[cls].values
    if len(classes) < 2:
        raise DataFormatError(f"class column {header[cls]!r} has a single value", None, path)
    X = np.column_stack([c for j, c in enumerate(columns) if j != cls]) if len(header) > 1 else np.empty((len(kept_rows), 0))
    schema = tuple(a for j, a in enumerate(attributes) if j != cls)
    return Dataset(schema, classes, X, columns[cls].astype(np.intp), relation=path.stem, class_name=header[cls])


def load(path, **kwargs) -> Dataset:
    """Dispatch on the file suffix (``.arff`` or ``.csv``)."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return load_csv(path, **kwargs)
    return load_arff(path, **kwargs)


# ---------------------------------------------------------------------------
# Registry and validation


@dataclass(frozen=True)
class DatasetDescriptor:
    name: str
    n_classes: int
    n_attributes: int
    n_instances: int
    path: str | None = None
    # Set when the published attribute count is known to disagree with the file.
    note: str = ""

    def __post_init__(self):
        if min(self.n_classes, self.n_attributes, self.n_instances) <= 0:
            raise ValueError("descriptor counts must be positive")


@dataclass(frozen=True)
class ValidationReport:
    descriptor: DatasetDescriptor
    mismatches: tuple[str, ...] = field(default_factory=tuple)
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            text = f"{self.descriptor.name}: ok"
        else:
            text = f"{self.descriptor.name}: " + "; ".join(self.mismatches)
        if self.notes:
            text += " (" + "; ".join(self.notes) + ")"
        return text


DATASETS_DIR = Path(os.environ.get("CHANCEBOOST_DATA", Path(__file__).resolve().parents[2] / "datasets"))

REGISTRY: dict[str, DatasetDescriptor] = {
    d.name: d
    for d in [
        DatasetDescriptor("iris", 3, 4, 150, "iris.arff"),
        DatasetDescriptor("vowel", 11, 13, 990, "vowel.arff"),
        DatasetDescriptor("letter", 26, 16, 20000, "letter.arff"),
        DatasetDescriptor("handwritten", 10, 256, 1593, "handwritten.arff"),
        DatasetDescriptor("isolet", 26, 617, 7797, "isolet.arff"),
        DatasetDescriptor("optdigits.tra", 10, 64, 3823, "optdigits.tra.arff"),
        DatasetDescriptor(
            "pendigits.tra", 10, 17, 7494, "pendigits.tra.arff",
            note="published count of 17 attributes includes the class column (16 features)",
        ),
    ]
}


def descriptor_path(descriptor: DatasetDescriptor, root=None) -> Path:
    root = Path(root) if root is not None else DATASETS_DIR
    return root / (descriptor.path or f"{descriptor.name}.arff")


def load_registered(name: str, root=None) -> Dataset:
    try:
        descriptor = REGISTRY[name.lower()]
    except KeyError:
        raise KeyError(f"unknown dataset {name!r}; registered: {', '.join(REGISTRY)}") from None
    return load_arff(descriptor_path(descriptor, root))


def validate(data: Dataset, descriptor: DatasetDescriptor) -> ValidationReport:
    """Compare a loaded dataset's counts with the published ones."""
    mismatches = []
    notes = []
    if data.n_classes != descriptor.n_classes:
        mismatches.append(f"classes: expected {descriptor.n_classes}, found {data.n_classes}")
    if data.n_attributes != descriptor.n_attributes:
        if descriptor.note and data.n_attributes + 1 == descriptor.n_attributes:
            notes.append(f"attributes: found {data.n_attributes}; {descriptor.note}")
        else:
            mismatches.append(f"attributes: expected {descriptor.n_attributes}, found {data.n_attributes}")
    if data.n_instances != descriptor.n_instances:
        mismatches.append(f"instances: expected {descriptor.n_instances}, found {data.n_instances}")
    return ValidationReport(descriptor, tuple(mismatches), tuple(notes))
