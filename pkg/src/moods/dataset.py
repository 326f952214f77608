"""Two-class datasets: CSV ingestion, stratified splitting and z-scoring.

Labels are always stored as ``1`` for the minority class and ``0`` for the
majority class; the raw label strings are kept so a dataset can be written
back out unchanged.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .exceptions import ClassError, ParseError, SplitError

DEFAULT_FRACTIONS = (0.6, 0.2, 0.2)
BUNDLED = ("ecoli", "yeast", "winequality")


class LabeledPoint(NamedTuple):
    features: np.ndarray
    label: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered collection of labeled points.

    Parameters
    ----------
    X : ndarray of shape (n_points, n_features)
    y : ndarray of shape (n_points,)
        ``1`` for minority, ``0`` for majority.
    index : ndarray of shape (n_points,), optional
        Row number of each point in the source dataset, ``-1`` for synthetic
        points. Defaults to ``arange(n_points)``.
    """

    X: np.ndarray
    y: np.ndarray
    name: str = "dataset"
    minority_label: str = "1"
    majority_label: str = "0"
    index: np.ndarray | None = None
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, 0)
        y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be 0 (majority) or 1 (minority)")
        if not np.isfinite(X).all():
            raise ValueError("features must be finite")
        index = np.arange(len(y)) if self.index is None else np.asarray(self.index, dtype=np.int64)
        if index.shape != y.shape:
            raise ValueError("index must have one entry per point")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "index", index)

    def __len__(self):
        return len(self.y)

    def __iter__(self) -> Iterator[LabeledPoint]:
        for x, label in zip(self.X, self.y):
            yield LabeledPoint(x, int(label))

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_minority(self) -> int:
        return int(self.y.sum())

    @property
    def n_majority(self) -> int:
        return len(self.y) - self.n_minority

    @property
    def is_synthetic(self) -> np.ndarray:
        return self.index < 0

    def subset(self, positions) -> "Dataset":
        positions = np.asarray(positions, dtype=np.int64)
        return replace(self, X=self.X[positions], y=self.y[positions], index=self.index[positions])

    def with_points(self, X, y, index=None) -> "Dataset":
        """Same metadata, different points."""
        X = np.asarray(X, dtype=np.float64).reshape(-1, self.n_features)
        return replace(self, X=X, y=y, index=index)

    def equals(self, other: "Dataset") -> bool:
        return (
            self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
            and self.minority_label == other.minority_label
            and self.majority_label == other.majority_label
        )


def concat(parts: Sequence[Dataset]) -> Dataset:
    """Stack datasets that share feature width; metadata comes from the first."""
    first = parts[0]
    widths = {p.n_features for p in parts}
    if len(widths) != 1:
        raise ValueError(f"feature widths differ: {sorted(widths)}")
    return replace(
        first,
        X=np.vstack([p.X for p in parts]),
        y=np.concatenate([p.y for p in parts]),
        index=np.concatenate([p.index for p in parts]),
    )


def class_partition(d: Dataset) -> tuple[Dataset, Dataset]:
    """Split `d` into its minority and majority points, preserving order."""
    return d.subset(np.flatnonzero(d.y == 1)), d.subset(np.flatnonzero(d.y == 0))


# ---------------------------------------------------------------------------
# CSV and manifests
# ---------------------------------------------------------------------------

def load_csv(path, label_column=-1, minority_label="1", has_header=False, name=None) -> Dataset:
    """Read a comma-separated two-class dataset.

    Parameters
    ----------
    path : path-like
    label_column : int or str
        Column index (negative indices allowed) or header name.
    minority_label : str
        Raw label value that becomes class ``1``.
    has_header : bool
        Whether the first line holds column names.

    Raises
    ------
    ParseError
        Ragged rows, non-numeric or non-finite features, empty file.
    ClassError
        The label column does not hold exactly two values, the minority
        label is absent, or the "minority" class is the larger one.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as f:
        rows = [(lineno, row) for lineno, row in enumerate(csv.reader(f), start=1) if row]
    if not rows:
        raise ParseError(f"{path} is empty")

    header = None
    if has_header:
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
        if not rows:
            raise ParseError(f"{path} has a header but no data")
    width = len(header) if header is not None else len(rows[0][1])

    if isinstance(label_column, str):
        if header is None or label_column not in header:
            raise ParseError(f"label column {label_column!r} not found in header")
        label_at = header.index(label_column)
    else:
        label_at = label_column % width if -width <= label_column < width else None
        if label_at is None:
            raise ParseError(f"label column {label_column} out of range for {width} columns")

    features, labels = [], []
    for lineno, row in rows:
        if len(row) != width:
            raise ParseError(f"expected {width} columns, found {len(row)}", row=lineno)
        values = []
        for j, cell in enumerate(row):
            if j == label_at:
                continue
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric feature {cell.strip()!r} in column {j}", row=lineno) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite feature {cell.strip()!r} in column {j}", row=lineno)
            values.append(v)
        features.append(values)
        labels.append(row[label_at].strip())

    minority_label = str(minority_label).strip()
    distinct = sorted(set(labels))
    if len(distinct) != 2:
        raise ClassError(f"expected exactly two labels, found {distinct}")
    if minority_label not in distinct:
        raise ClassError(f"minority label {minority_label!r} not among {distinct}")
    majority_label = distinct[0] if distinct[1] == minority_label else distinct[1]
    y = np.array([lab == minority_label for lab in labels], dtype=np.int64)
    if y.sum() > len(y) - y.sum():
        raise ClassError(f"label {minority_label!r} is the majority class ({y.sum()} of {len(y)})")

    names = None
    if header is not None:
        names = tuple(h for j, h in enumerate(header) if j != label_at)
    return Dataset(
        X=np.array(features, dtype=np.float64).reshape(len(rows), width - 1),
        y=y,
        name=name or path.stem,
        minority_label=minority_label,
        majority_label=majority_label,
        feature_names=names,
    )


def save_csv(d: Dataset, path, provenance=False) -> Path:
    """Write `d` with a header row and raw labels in the last column.

    With ``provenance=True`` two trailing columns are added: ``provenance``
    (``original`` or ``synthetic``) and ``row``, the source row number
    (-1 for synthetic points). Such files are read back with
    :func:`moods.sampler.load_sample`, not :func:`load_csv`.
    """
    path = Path(path)
    names = list(d.feature_names or (f"x{j}" for j in range(d.n_features)))
    header = names + ["label"] + (["provenance", "row"] if provenance else [])
    raw = np.where(d.y == 1, d.minority_label, d.majority_label)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for x, lab, idx in zip(d.X, raw, d.index):
            row = [repr(float(v)) for v in x] + [lab]
            if provenance:
                row += ["synthetic" if idx < 0 else "original", int(idx)]
            w.writerow(row)
    return path


@dataclass(frozen=True)
class Manifest:
    name: str
    path: Path
    label_column: int | str = -1
    minority_label: str = "1"
    has_header: bool = False

    def load(self) -> Dataset:
        return load_csv(self.path, self.label_column, self.minority_label, self.has_header, name=self.name)


def load_manifest(path) -> Manifest:
    """Read a JSON manifest; a relative data path is resolved against it."""
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    missing = {"name", "path", "label_column", "minority_label"} - raw.keys()
    if missing:
        raise ParseError(f"manifest {path} lacks {sorted(missing)}")
    data_path = Path(raw["path"])
    if not data_path.is_absolute():
        data_path = path.parent / data_path
    return Manifest(
        name=raw["name"],
        path=data_path,
        label_column=raw["label_column"],
        minority_label=str(raw["minority_label"]),
        has_header=bool(raw.get("has_header", False)),
    )


def bundled_manifest(name: str) -> Path:
    """Path to the manifest of a bundled benchmark (ecoli, yeast, winequality)."""
    if name not in BUNDLED:
        raise KeyError(f"no bundled dataset {name!r}; choose from {BUNDLED}")
    return Path(str(resources.files("moods") / "data" / f"{name}.json"))


def load_bundled(name: str) -> Dataset:
    return load_manifest(bundled_manifest(name)).load()


# ---------------------------------------------------------------------------
# Splitting and standardization
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DataSplit:
    train: Dataset
    validation: Dataset
    test: Dataset
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS
    seed: int = 0
    # (mean, scale) when standardized
    transform: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    @property
    def parts(self) -> tuple[Dataset, Dataset, Dataset]:
        return self.train, self.validation, self.test


def _share(fraction, n):
    # round half up, and never leave a held-out part without this class
    return max(1, int(math.floor(fraction * n + 0.5)))


def split(d: Dataset, fractions=DEFAULT_FRACTIONS, seed=0) -> DataSplit:
    """Stratified train/validation/test split.

    Each class is shuffled with ``default_rng(seed)``; validation and test
    receive ``round(fraction * class_size)`` points of it (at least one)
    and train receives the rest. Each part keeps the original row order.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or min(fractions) <= 0 or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be three positive numbers summing to 1, got {fractions}")
    _, f_val, f_test = fractions
    rng = np.random.default_rng(seed)
    parts = ([], [], [])
    for cls in (1, 0):
        members = rng.permutation(np.flatnonzero(d.y == cls))
        n = len(members)
        n_test, n_val = _share(f_test, n), _share(f_val, n)
        if n - n_test - n_val < 1:
            kind = "minority" if cls else "majority"
            raise SplitError(f"{kind} class has {n} points, too few to stratify into three parts")
        parts[2].append(members[:n_test])
        parts[1].append(members[n_test:n_test + n_val])
        parts[0].append(members[n_test + n_val:])
    train, val, test = (d.subset(np.sort(np.concatenate(p))) for p in parts)
    if len(train) <= len(test):
        raise SplitError(f"train part ({len(train)}) must be larger than test part ({len(test)})")
    return DataSplit(train, val, test, fractions=fractions, seed=seed)


def fit_standardizer(X) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and sample standard deviation; constants map to (0, 1)."""
    X = np.asarray(X, dtype=np.float64)
    if len(X) < 2:
        return np.zeros(X.shape[1]), np.ones(X.shape[1])
    mean = X.mean(axis=0)
    scale = X.std(axis=0, ddof=1)
    constant = scale == 0
    mean[constant] = 0.0
    scale[constant] = 1.0
    return mean, scale


def standardize(s: DataSplit) -> DataSplit:
    """Z-score all three parts with statistics from the train part only."""
    mean, scale = fit_standardizer(s.train.X)

    def apply(part):
        return replace(part, X=(part.X - mean) / scale)

    return replace(s, train=apply(s.train), validation=apply(s.validation),
                   test=apply(s.test), transform=(mean, scale))
