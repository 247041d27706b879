"""Dataset ingestion, class-conditional splitting, standardization and folds.

Datasets are immutable after load: every operation returns new arrays and
never mutates its input, so values are safe to share across workers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .errors import DataError
from .rng import stream

#: Largest n for which the diameter is computed exactly over all pairs.
EXACT_DIAMETER_LIMIT = 2000


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with binary labels in {-1, +1}.

    ``flags`` carries load-time metadata such as ``label_mapping`` (when the
    source used {0, 1} labels) and ``single_class`` (set when only one label
    occurs; MMD scoring refuses such data, loading does not).
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] | None = None
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if features.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        if labels.shape != (features.shape[0],):
            raise DataError(
                f"label count {labels.shape} does not match {features.shape[0]} rows"
            )
        if not np.isfinite(features).all():
            raise DataError("features contain non-finite entries")
        bad = set(np.unique(labels)) - {-1, 1}
        if bad:
            raise DataError(f"labels must be -1/+1, found {sorted(bad)}")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        if len(set(labels.tolist())) < 2:
            self.flags.setdefault("single_class", True)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class ClassSplit:
    """Rows of each class in their original order."""

    positives: np.ndarray
    negatives: np.ndarray

    @property
    def n_plus(self) -> int:
        return self.positives.shape[0]

    @property
    def n_minus(self) -> int:
        return self.negatives.shape[0]

    @property
    def balanced(self) -> bool:
        return self.n_plus == self.n_minus


@dataclass(frozen=True)
class DatasetStats:
    """Column statistics of the source data plus a diameter of the output.

    ``per_feature_mean``/``per_feature_std`` record the inverse transform of
    :func:`standardize` (population std, divisor n). ``diameter`` refers to
    the standardized features; it is exact for n <= EXACT_DIAMETER_LIMIT and
    a bounding-box upper bound otherwise (``diameter_is_exact``).
    """

    diameter: float
    per_feature_mean: np.ndarray
    per_feature_std: np.ndarray
    diameter_is_exact: bool = True


def _map_labels(raw: np.ndarray) -> tuple[np.ndarray, str | None]:
    values = set(np.unique(raw).tolist())
    if values <= {-1.0, 1.0}:
        return raw.astype(int), None
    if values <= {0.0, 1.0}:
        return np.where(raw == 0, -1, 1).astype(int), "0->-1,1->+1"
    raise DataError(f"unsupported label alphabet {sorted(values)}; expected -1/+1 or 0/1")


def _load_csv(path: str) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        header = [h.strip() for h in header]
        if "label" not in header:
            raise DataError(f"{path}: header must contain a 'label' column")
        label_col = header.index("label")
        names = tuple(h for i, h in enumerate(header) if i != label_col)
        rows, labels = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}"
                )
            try:
                values = [float(v) for v in rec]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            labels.append(values.pop(label_col))
            if not all(math.isfinite(v) for v in values):
                raise DataError(f"{path}:{lineno}: non-finite feature value")
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float), np.asarray(labels, dtype=float), names


def _load_libsvm(path: str, n_features: int | None) -> tuple[np.ndarray, np.ndarray]:
    entries, labels, max_idx = [], [], 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                labels.append(float(parts[0]))
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad label {parts[0]!r}") from None
            pairs = {}
            for tok in parts[1:]:
                try:
                    idx_s, val_s = tok.split(":", 1)
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: bad entry {tok!r}") from None
                if idx < 1:
                    raise DataError(f"{path}:{lineno}: indices are 1-based, got {idx}")
                if not math.isfinite(val):
                    raise DataError(f"{path}:{lineno}: non-finite value in {tok!r}")
                pairs[idx] = val
                max_idx = max(max_idx, idx)
            entries.append(pairs)
    if not entries:
        raise DataError(f"{path}: no data rows")
    d = n_features if n_features is not None else max_idx
    if max_idx > d:
        raise DataError(f"{path}: feature index {max_idx} exceeds n_features={d}")
    features = np.zeros((len(entries), d))
    for i, pairs in enumerate(entries):
        for idx, val in pairs.items():
            features[i, idx - 1] = val
    return features, np.asarray(labels, dtype=float)


def load_dataset(path: str, format: str = "csv", n_features: int | None = None) -> LabeledDataset:
    """Load a dataset from ``csv`` (header with a 'label' column) or ``libsvm``.

    {0,1} labels are mapped to {-1,+1} and the mapping is recorded in
    ``flags['label_mapping']``. Rows with non-finite entries are rejected,
    not imputed.
    """
    if format == "csv":
        features, raw_labels, names = _load_csv(path)
    elif format == "libsvm":
        features, raw_labels = _load_libsvm(path, n_features)
        names = None
    else:
        raise DataError(f"unknown dataset format {format!r}")
    labels, mapping = _map_labels(raw_labels)
    flags = {}
    if mapping:
        flags["label_mapping"] = mapping
    return LabeledDataset(features, labels, feature_names=names, flags=flags)


def split_by_label(ds: LabeledDataset) -> ClassSplit:
    """Split rows into the two class-conditional samples, order preserved."""
    pos = ds.features[ds.labels == 1]
    neg = ds.features[ds.labels == -1]
    if pos.shape[0] == 0 or neg.shape[0] == 0:
        raise DataError("both classes must be nonempty")
    return ClassSplit(positives=pos, negatives=neg)


def standardize(ds: LabeledDataset) -> tuple[LabeledDataset, DatasetStats]:
    """Center/scale each column to mean 0 and population std 1 (divisor n).

    Constant columns are left at 0 and their std recorded as 0 so that the
    same transform can be replayed on prediction inputs.
    """
    if ds.n < 2:
        raise DataError("standardize needs n >= 2")
    mean = ds.features.mean(axis=0)
    std = ds.features.std(axis=0)  # ddof=0
    scale = np.where(std > 0, std, 1.0)
    out = (ds.features - mean) / scale
    out[:, std == 0] = 0.0
    std_ds = LabeledDataset(out, ds.labels, ds.feature_names, dict(ds.flags))
    diam, exact = _diameter(out)
    return std_ds, DatasetStats(
        diameter=diam,
        per_feature_mean=mean,
        per_feature_std=std,
        diameter_is_exact=exact,
    )


def apply_standardization(features: np.ndarray, stats: DatasetStats) -> np.ndarray:
    """Replay the transform recorded by :func:`standardize` on new rows."""
    features = np.asarray(features, dtype=float)
    scale = np.where(stats.per_feature_std > 0, stats.per_feature_std, 1.0)
    out = (features - stats.per_feature_mean) / scale
    out[:, stats.per_feature_std == 0] = 0.0
    return out


def kfold_split(ds: LabeledDataset, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Stratified k-fold partition, deterministic under ``seed``.

    Validation folds are disjoint, cover all indices, and keep the class
    proportions within one sample of the global ones.
    """
    if not 2 <= k <= ds.n:
        raise DataError(f"k must lie in [2, {ds.n}], got {k}")
    all_idx = np.arange(ds.n)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls_key, cls in enumerate((1, -1)):
        idx = all_idx[ds.labels == cls]
        idx = stream(seed, cls_key).permutation(idx)
        for j in range(k):
            folds[j].extend(idx[j::k].tolist())
    out = []
    for j in range(k):
        val = np.array(sorted(folds[j]), dtype=int)
        train = np.setdiff1d(all_idx, val)
        out.append((train, val))
    return out


def _diameter(features: np.ndarray) -> tuple[float, bool]:
    n = features.shape[0]
    if n <= 1:
        return 0.0, True
    if n <= EXACT_DIAMETER_LIMIT:
        return float(pdist(features).max()), True
    box = features.max(axis=0) - features.min(axis=0)
    return float(np.linalg.norm(box)), False


def diameter(ds: LabeledDataset) -> float:
    """Max pairwise Euclidean distance (exact up to n=2000, bound beyond)."""
    return _diameter(ds.features)[0]


def dataset_stats(ds: LabeledDataset) -> DatasetStats:
    """Column means/stds plus the diameter of the features as they stand."""
    diam, exact = _diameter(ds.features)
    return DatasetStats(
        diameter=diam,
        per_feature_mean=ds.features.mean(axis=0),
        per_feature_std=ds.features.std(axis=0),
        diameter_is_exact=exact,
    )
