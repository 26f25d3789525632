"""Datasets: parsing, attribute scaling, seeded splits and the Rings generator."""
import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DimensionMismatch, InvalidParameter, LabelError, ParseError, TooSmall
from .numerics import Rng, rng_shuffle

SPARSE = "sparse-index-value"
CSV = "csv-last-column-label"
UCI_BREAST = "uci-breast"
FORMATS = (SPARSE, CSV)


class LabeledPoint(NamedTuple):
    features: np.ndarray
    label: int


@dataclass
class Dataset:
    """Labeled points stored as a design matrix ``X`` and labels ``y`` in {-1, +1}."""

    X: np.ndarray
    y: np.ndarray
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise InvalidParameter(f"X must be 2-dimensional, got shape {self.X.shape}")
        if self.X.shape[0] == 0:
            raise TooSmall("dataset is empty")
        if self.y.shape != (self.X.shape[0],):
            raise DimensionMismatch(f"{self.X.shape[0]} points but {self.y.shape} labels")
        if not np.all(np.isin(self.y, (-1, 1))):
            raise LabelError("labels must be -1 or +1")
        if not np.all(np.isfinite(self.X)):
            raise InvalidParameter("features must be finite")

    @property
    def dim(self):
        return self.X.shape[1]

    def __len__(self):
        return self.X.shape[0]

    def __iter__(self):
        for x, label in zip(self.X, self.y):
            yield LabeledPoint(x, int(label))

    @property
    def points(self):
        return list(self)

    def subset(self, indices, name=None):
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.X[indices], self.y[indices], name or self.name, dict(self.meta))

    def with_features(self, X):
        return Dataset(X, self.y.copy(), self.name, dict(self.meta))


def _map_labels(raw):
    distinct = sorted(set(raw))
    if len(distinct) > 2:
        shown = ", ".join(f"{v:g}" for v in distinct[:5])
        raise LabelError(f"more than two distinct labels: {shown}")
    if set(distinct) <= {-1.0, 1.0}:
        return np.array(raw, dtype=np.int64)
    if len(distinct) == 2:
        low = distinct[0]
        return np.array([-1 if v == low else 1 for v in raw], dtype=np.int64)
    return np.array([-1 if v <= 0 else 1 for v in raw], dtype=np.int64)


def _read_text(source):
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, str):
        data = source.encode("utf-8")
    else:
        data = source.read()
        if isinstance(data, str):
            data = data.encode("utf-8")
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not UTF-8: {exc}") from None


def _parse_number(token, lineno, what):
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"bad {what} {token!r}", lineno) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite {what} {token!r}", lineno)
    return value


def _parse_sparse(text, dim):
    labels, rows = [], []
    max_index = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        labels.append(_parse_number(tokens[0], lineno, "label"))
        entries = {}
        for token in tokens[1:]:
            idx, sep, val = token.partition(":")
            if not sep:
                raise ParseError(f"expected <index>:<value>, got {token!r}", lineno)
            try:
                j = int(idx)
            except ValueError:
                raise ParseError(f"bad feature index {idx!r}", lineno) from None
            if j < 1:
                raise ParseError(f"feature indices are 1-based, got {j}", lineno)
            entries[j] = _parse_number(val, lineno, "value")
            max_index = max(max_index, j)
        rows.append(entries)
    if not rows:
        raise ParseError("no data lines")
    if dim is None:
        dim = max_index
    elif max_index > dim:
        raise DimensionMismatch(f"feature index {max_index} exceeds dim {dim}")
    X = np.zeros((len(rows), dim))
    for i, entries in enumerate(rows):
        for j, v in entries.items():
            X[i, j - 1] = v
    return X, labels


def _parse_csv(text):
    labels, rows = [], []
    width = None
    reader = csv.reader(io.StringIO(text))
    for lineno, fields in enumerate(reader, start=1):
        if not fields or not "".join(fields).strip() or fields[0].lstrip().startswith("#"):
            continue
        if width is None and not rows:
            try:
                float(fields[-1])
            except ValueError:
                continue  # header row
        if width is None:
            width = len(fields)
            if width < 2:
                raise ParseError("csv rows need at least one feature and a label", lineno)
        elif len(fields) != width:
            raise ParseError(f"expected {width} columns, got {len(fields)}", lineno)
        rows.append([_parse_number(f.strip(), lineno, "value") for f in fields[:-1]])
        labels.append(_parse_number(fields[-1].strip(), lineno, "label"))
    if not rows:
        raise ParseError("no data lines")
    return np.array(rows, dtype=np.float64), labels


def parse_dataset(source, format=SPARSE, name="", dim=None):
    """Parse ``source`` (bytes, text or a readable stream) into a :class:`Dataset`.

    Two-valued label schemes other than -1/+1 are remapped so that the
    smaller label becomes -1.
    """
    if format not in FORMATS:
        raise InvalidParameter(f"unknown format {format!r}; expected one of {FORMATS}")
    text = _read_text(source)
    if format == SPARSE:
        X, raw = _parse_sparse(text, dim)
    else:
        X, raw = _parse_csv(text)
    y = _map_labels(raw)
    return Dataset(X, y, name)


def guess_format(path):
    return CSV if str(path).lower().endswith(".csv") else SPARSE


def load_dataset(path, format=None, dim=None):
    fmt = format or guess_format(path)
    if fmt == UCI_BREAST:
        return load_uci_breast(path)
    with open(path, "rb") as fh:
        ds = parse_dataset(fh, fmt, name=os.path.basename(str(path)), dim=dim)
    ds.meta["source"] = str(path)
    return ds


def serialize_sparse(ds):
    """Sparse text encoding of ``ds``; exact inverse of :func:`parse_dataset`."""
    lines = []
    for i, (x, label) in enumerate(zip(ds.X, ds.y)):
        parts = ["+1" if label > 0 else "-1"]
        nonzero = [j for j in range(ds.dim) if x[j] != 0.0]
        if i == 0 and ds.dim and (ds.dim - 1) not in nonzero:
            # pin the dimension so trailing all-zero attributes survive a round trip
            nonzero.append(ds.dim - 1)
        parts.extend(f"{j + 1}:{float(x[j])!r}" for j in nonzero)
        lines.append(" ".join(parts))
    return ("\n".join(lines) + "\n").encode("utf-8")


def serialize_csv(ds):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for x, label in zip(ds.X, ds.y):
        writer.writerow([repr(float(v)) for v in x] + [int(label)])
    return buf.getvalue().encode("utf-8")


def load_uci_breast(path):
    """Wisconsin breast cancer file: drops the id column and rows with ``?``."""
    rows, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            if "?" in fields:
                continue
            if len(fields) != 11:
                raise ParseError(f"expected 11 columns, got {len(fields)}", lineno)
            rows.append([_parse_number(f, lineno, "value") for f in fields[1:-1]])
            labels.append(_parse_number(fields[-1], lineno, "label"))
    if not rows:
        raise ParseError("no data lines")
    return Dataset(np.array(rows), _map_labels(labels), "breast", {"source": str(path)})


@dataclass
class ScalingParams:
    min: np.ndarray
    max: np.ndarray

    @property
    def dim(self):
        return self.min.shape[0]


def fit_scaling(train):
    X = train.X if isinstance(train, Dataset) else np.asarray(train, dtype=np.float64)
    return ScalingParams(X.min(axis=0), X.max(axis=0))


def scale_array(params, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.dim:
        raise DimensionMismatch(f"scaling fitted on {params.dim} attributes, got shape {X.shape}")
    d = params.dim
    span = params.max - params.min
    constant = span <= 0
    safe = np.where(constant, 1.0, span)
    Z = (2.0 * (X - params.min) / safe - 1.0) / d
    Z[:, constant] = 0.0
    return Z


def apply_scaling(params, ds):
    """Affine map sending the fitted min/max of each attribute to -1/d and +1/d.

    Values outside the fitted range are not clipped.
    """
    return ds.with_features(scale_array(params, ds.X))


class AttributeScaler(TransformerMixin, BaseEstimator):
    """Scale every attribute to ``[-1/d, 1/d]`` using training minima and maxima."""

    def fit(self, X, y=None):
        X = check_array(X)
        self.params_ = fit_scaling(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        return scale_array(self.params_, check_array(X))


@dataclass(frozen=True)
class SplitSpec:
    seed: int = 0
    train_fraction: float = 0.7
    validation_fraction: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidParameter("train_fraction must lie in (0, 1)")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise InvalidParameter("validation_fraction must lie in [0, 1)")


def _floor(x):
    # guards against 70 * 0.3 = 20.999999999999996
    return int(math.floor(x + 1e-9))


def split_sizes(n, spec):
    n_outer = _floor(n * spec.train_fraction)
    n_val = _floor(n_outer * spec.validation_fraction)
    return n_outer - n_val, n_val, n - n_outer


def split(ds, spec):
    """Seeded train / validation / test partition of ``ds``.

    Train receives ``floor(n * train_fraction)`` points, validation is carved
    from it the same way, and the remainder is the test part. Each part keeps
    the original point order.
    """
    n = len(ds)
    n_train, n_val, n_test = split_sizes(n, spec)
    if n_train == 0 or n_test == 0 or (spec.validation_fraction > 0 and n_val == 0):
        raise TooSmall(f"{n} points give split sizes {n_train}/{n_val}/{n_test}")
    perm = rng_shuffle(Rng(spec.seed), n)
    train_idx = np.sort(perm[:n_train])
    val_idx = np.sort(perm[n_train:n_train + n_val])
    test_idx = np.sort(perm[n_train + n_val:])
    parts = []
    for label, idx in (("train", train_idx), ("validation", val_idx), ("test", test_idx)):
        # datasets are never empty, so a zero-size validation part is None
        part = None
        if len(idx):
            part = ds.subset(idx, f"{ds.name}:{label}" if ds.name else label)
            part.meta["indices"] = idx
            part.meta["split_seed"] = spec.seed
        parts.append(part)
    return tuple(parts)


def generate_rings(n_train=700, n_test=300, seed=0, radii=(1.0, 2.0), noise=0.1):
    """Two noisy concentric rings: +1 on the inner radius, -1 on the outer one."""
    if n_train < 2 or n_test < 2:
        raise InvalidParameter("rings need at least two points per set")
    rng = Rng(seed)

    def draw(n, name):
        X = np.empty((n, 2))
        y = np.empty(n, dtype=np.int64)
        for i in range(n):
            label = 1 if i % 2 == 0 else -1
            angle = 2.0 * math.pi * rng.uniform()
            radius = (radii[0] if label > 0 else radii[1]) + noise * rng.normal()
            X[i] = radius * math.cos(angle), radius * math.sin(angle)
            y[i] = label
        return Dataset(X, y, name, {"generator": "rings", "seed": seed})

    return draw(n_train, "rings:train"), draw(n_test, "rings:test")
