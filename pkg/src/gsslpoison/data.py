"""Dataset ingestion (libsvm text), normalization, synthetic generators and
deterministic labeled/unlabeled splitting.

Rows 0..n_l-1 of a Dataset are the labeled block; everything below is the
convention the propagation operator relies on.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ParseError

DATASET_FORMAT_VERSION = 1


class Task(str, enum.Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with labels and a labeled-prefix split.

    Classification labels live in {-1, +1}.  n_l may equal n for a freshly
    loaded file; transductive operations require n_l < n and say so.
    """

    features: np.ndarray
    labels: np.ndarray
    n_l: int
    task: Task

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.features, dtype=float))
        y = np.ascontiguousarray(np.asarray(self.labels, dtype=float))
        if X.ndim != 2 or X.shape[1] < 1:
            raise ValueError("features must be an n x d matrix with d >= 1")
        if y.shape != (X.shape[0],):
            raise ValueError("labels must have length n")
        if not 1 <= self.n_l <= X.shape[0]:
            raise ValueError(f"n_l={self.n_l} outside [1, {X.shape[0]}]")
        if self.task is Task.CLASSIFICATION and not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("classification labels must be -1 or +1")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_u(self) -> int:
        return self.n - self.n_l

    @property
    def X_l(self) -> np.ndarray:
        return self.features[: self.n_l]

    @property
    def X_u(self) -> np.ndarray:
        return self.features[self.n_l :]

    @property
    def y_l(self) -> np.ndarray:
        return self.labels[: self.n_l]

    @property
    def y_u(self) -> np.ndarray:
        return self.labels[self.n_l :]


def load_libsvm(path, task: Task) -> Dataset:
    """Read a libsvm text file (`label idx:val ...`, 1-based increasing indices).

    Absent indices become 0.  For classification, the two distinct raw label
    values are mapped to {-1, +1} in ascending order.  The returned split is
    n_l = n (fully labeled); use split_labeled afterwards.
    """
    rows = []
    raw_labels = []
    d = 0
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            try:
                raw_labels.append(float(parts[0]))
            except ValueError:
                raise ParseError(f"line {lineno}: bad label {parts[0]!r}") from None
            entries = []
            prev = 0
            for tok in parts[1:]:
                try:
                    idx_s, val_s = tok.split(":")
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise ParseError(f"line {lineno}: bad entry {tok!r}") from None
                if idx <= prev:
                    raise ParseError(
                        f"line {lineno}: index {idx} not strictly increasing"
                    )
                prev = idx
                entries.append((idx, val))
            d = max(d, prev)
            rows.append(entries)
    if not rows:
        raise ParseError("empty file")

    X = np.zeros((len(rows), max(d, 1)))
    for i, entries in enumerate(rows):
        for idx, val in entries:
            X[i, idx - 1] = val
    y = np.asarray(raw_labels)

    if task is Task.CLASSIFICATION:
        values = np.unique(y)
        if values.size > 2:
            raise ValueError(f"classification needs <= 2 distinct labels, got {values.size}")
        if values.size == 2:
            y = np.where(y == values[0], -1.0, 1.0)
        elif not np.all(np.isin(values, (-1.0, 1.0))):
            raise ValueError("single-class file with non +-1 label")
    return Dataset(X, y, n_l=len(rows), task=task)


def normalize(ds: Dataset) -> Dataset:
    """Standardize features to mean 0 / population std 1 per column; map
    regression labels affinely onto [0, 1].

    Zero-variance columns are centered only (divisor forced to 1).
    """
    if ds.n < 2:
        raise ValueError("normalize needs n >= 2")
    X = ds.features
    mu = X.mean(axis=0)
    sigma = np.sqrt(((X - mu) ** 2).mean(axis=0))
    sigma = np.where(sigma <= 1e-12 * (1.0 + np.abs(mu)), 1.0, sigma)
    X = (X - mu) / sigma

    y = ds.labels
    if ds.task is Task.REGRESSION:
        lo, hi = y.min(), y.max()
        if hi == lo:
            raise ValueError("constant regression labels cannot be scaled to [0, 1]")
        y = (y - lo) / (hi - lo)
    return Dataset(X, y, n_l=ds.n_l, task=ds.task)


def split_labeled(ds: Dataset, n_l: int, seed: int) -> Dataset:
    """Deterministically permute rows and mark the first n_l as labeled."""
    if not 1 <= n_l <= ds.n:
        raise ValueError(f"n_l={n_l} outside [1, {ds.n}]")
    perm = np.random.default_rng(seed).permutation(ds.n)
    return Dataset(ds.features[perm], ds.labels[perm], n_l=n_l, task=ds.task)


def subsample(ds: Dataset, max_n: int, seed: int) -> Dataset:
    """Uniform row subsample (without replacement) down to max_n rows."""
    if max_n < 2:
        raise ValueError("max_n must be >= 2")
    if ds.n <= max_n:
        return ds
    keep = np.sort(np.random.default_rng(seed).choice(ds.n, size=max_n, replace=False))
    return Dataset(ds.features[keep], ds.labels[keep], n_l=min(ds.n_l, max_n), task=ds.task)


def synth_two_clusters(
    n: int, d: int, n_l: int, gap: float, seed: int, task: Task = Task.CLASSIFICATION
) -> Dataset:
    """Two unit-variance Gaussian clusters with centers `gap` apart.

    Labels are +-1 (classification) or 1/0 cluster targets (regression).
    Labeled rows are drawn evenly from both clusters and land in the row
    prefix; everything is a pure function of the seed.
    """
    if not 1 <= n_l < n:
        raise ValueError("need 1 <= n_l < n")
    if gap <= 0:
        raise ValueError("gap must be positive")
    rng = np.random.default_rng(seed)
    n_pos = n // 2
    n_neg = n - n_pos
    center = np.zeros(d)
    center[0] = gap / 2.0
    X = np.vstack(
        [
            rng.standard_normal((n_pos, d)) + center,
            rng.standard_normal((n_neg, d)) - center,
        ]
    )
    if task is Task.CLASSIFICATION:
        y = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
    else:
        y = np.concatenate([np.ones(n_pos), np.zeros(n_neg)])

    l_pos = n_l // 2
    l_neg = n_l - l_pos
    pos_idx = rng.permutation(n_pos)
    neg_idx = n_pos + rng.permutation(n_neg)
    labeled = np.concatenate([pos_idx[:l_pos], neg_idx[:l_neg]])
    unlabeled = np.concatenate([pos_idx[l_pos:], neg_idx[l_neg:]])
    order = np.concatenate([rng.permutation(labeled), rng.permutation(unlabeled)])
    return Dataset(X[order], y[order], n_l=n_l, task=task)


def toy_cluster_flip() -> Dataset:
    """8-node instance where flipping labeled node 0 swings a 3-node cluster.

    Node 0 (label +1) sits next to unlabeled nodes 4..6; labeled nodes 1..3
    (label -1) sit far away next to unlabeled node 7.  With gamma = 1 the
    clean propagation reproduces the true labels, and the single most
    damaging flip is node 0, which changes the sign of all three cluster
    predictions.
    """
    X = np.array(
        [
            [0.0, 0.0],  # labeled +1, the pivot
            [8.0, 0.0],  # labeled -1
            [8.0, 1.0],  # labeled -1
            [9.0, 0.5],  # labeled -1
            [0.6, 0.2],  # unlabeled cluster, truly +1
            [0.7, -0.2],
            [0.5, 0.0],
            [8.5, 0.4],  # unlabeled, truly -1
        ]
    )
    y = np.array([1.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, -1.0])
    return Dataset(X, y, n_l=4, task=Task.CLASSIFICATION)


def save_dataset(ds: Dataset, path) -> None:
    """Write the versioned internal .npz format (exact round trip)."""
    np.savez(
        path,
        version=np.int64(DATASET_FORMAT_VERSION),
        features=ds.features,
        labels=ds.labels,
        n_l=np.int64(ds.n_l),
        task=np.str_(ds.task.value),
    )


def load_dataset(path) -> Dataset:
    with np.load(path) as npz:
        version = int(npz["version"])
        if version != DATASET_FORMAT_VERSION:
            raise ParseError(f"unsupported dataset format version {version}")
        return Dataset(
            npz["features"],
            npz["labels"],
            n_l=int(npz["n_l"]),
            task=Task(str(npz["task"])),
        )
