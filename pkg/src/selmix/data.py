"""Synthetic long-tailed Gaussian features, CSV I/O, and split management.

Datasets are plain containers of a feature matrix plus integer labels.  The
label vector doubles as the pseudo-label slot for unlabeled pools: a dataset
built with ``pseudo=True`` keeps the ground truth aside in ``true_labels``
(so pseudo-label accuracy stays measurable) while ``labels`` holds whatever
the current model assigned.  A pseudo label of -1 means "not assigned yet".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

CSV_HEADER_PREFIX = "label"


@dataclass(frozen=True)
class FeatureDataset:
    """Fixed feature vectors with labels and per-class index sets."""

    features: np.ndarray          # (N, d) float64
    labels: np.ndarray            # (N,) int64; -1 = unassigned pseudo slot
    num_classes: int
    pseudo: bool = False
    true_labels: np.ndarray | None = None

    def __post_init__(self):
        feats = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        if feats.ndim != 2:
            raise DataError("features must be a 2-D array")
        if labels.shape != (feats.shape[0],):
            raise DataError("labels length must match feature rows")
        if self.num_classes < 1:
            raise DataError("num_classes must be >= 1")
        low = -1 if self.pseudo else 0
        if labels.size and (labels.min() < low or labels.max() >= self.num_classes):
            raise DataError("label outside [0, K)")
        if self.true_labels is not None:
            tl = np.asarray(self.true_labels, dtype=np.int64)
            object.__setattr__(self, "true_labels", tl)
            if tl.shape != labels.shape:
                raise DataError("true_labels length must match labels")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def class_indices(self) -> list[np.ndarray]:
        """Row indices per class, in ascending row order (a partition of the
        assigned rows)."""
        return [np.flatnonzero(self.labels == k) for k in range(self.num_classes)]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels[self.labels >= 0], minlength=self.num_classes)

    def priors(self) -> np.ndarray:
        counts = self.class_counts()
        return counts / counts.sum()

    def with_labels(self, labels: np.ndarray) -> "FeatureDataset":
        """New dataset value with replaced (pseudo) labels; features shared."""
        return FeatureDataset(
            features=self.features,
            labels=labels,
            num_classes=self.num_classes,
            pseudo=self.pseudo,
            true_labels=self.true_labels,
        )


@dataclass(frozen=True)
class LTSpec:
    """Long-tailed Gaussian cluster description.

    Class counts follow the usual exponential profile
    ``N_k = round(N1 * rho ** (-(k-1)/(K-1)))`` so that ``N_1/N_K = rho``.
    Cluster means sit at ``cluster_separation`` along the k-th basis
    direction when d >= K, otherwise along seeded random unit vectors.
    """

    K: int = 10
    d: int = 16
    N1: int = 1500
    rho: float = 100.0
    cluster_separation: float = 1.0
    within_std: float = 0.55
    seed: int = 0

    def __post_init__(self):
        if self.K < 2:
            raise DataError("K must be >= 2")
        if self.d < 1:
            raise DataError("d must be >= 1")
        if self.N1 < 1:
            raise DataError("N1 must be >= 1")
        if self.rho < 1.0:
            raise DataError("rho must be >= 1")
        if self.within_std <= 0 or self.cluster_separation <= 0:
            raise DataError("within_std and cluster_separation must be positive")
        if self.class_counts()[-1] < 1:
            raise DataError("tail class count rounds to zero; increase N1 or lower rho")

    def class_counts(self) -> np.ndarray:
        k = np.arange(self.K)
        counts = np.rint(self.N1 * self.rho ** (-k / (self.K - 1))).astype(np.int64)
        return counts

    def class_means(self) -> np.ndarray:
        if self.d >= self.K:
            means = np.zeros((self.K, self.d))
            means[np.arange(self.K), np.arange(self.K)] = self.cluster_separation
            return means
        rng = np.random.default_rng(np.random.SeedSequence(self.seed).spawn(2)[0])
        raw = rng.standard_normal((self.K, self.d))
        return self.cluster_separation * raw / np.linalg.norm(raw, axis=1, keepdims=True)


def generate_longtail(spec: LTSpec) -> FeatureDataset:
    """Draw the long-tailed Gaussian mixture described by ``spec``.

    Deterministic given ``spec.seed``; rows are ordered by class.
    """
    counts = spec.class_counts()
    means = spec.class_means()
    sample_ss = np.random.SeedSequence(spec.seed).spawn(2)[1]
    rng = np.random.default_rng(sample_ss)
    feats = np.concatenate(
        [
            means[k] + spec.within_std * rng.standard_normal((counts[k], spec.d))
            for k in range(spec.K)
        ]
    )
    labels = np.repeat(np.arange(spec.K), counts)
    return FeatureDataset(features=feats, labels=labels, num_classes=spec.K)


def save_dataset(ds: FeatureDataset, path) -> None:
    """Write a dataset as CSV: header ``label,f0,...,f{d-1}``, LF endings.

    Floats are written with ``repr`` so the round trip is exact.  Pseudo
    datasets are saved with their ground-truth labels when available.
    """
    labels = ds.true_labels if (ds.pseudo and ds.true_labels is not None) else ds.labels
    header = ",".join([CSV_HEADER_PREFIX] + [f"f{i}" for i in range(ds.dim)])
    lines = [header]
    for row, lab in zip(ds.features, labels):
        lines.append(",".join([str(int(lab))] + [repr(float(v)) for v in row]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(path, expected_classes: int | None = None) -> FeatureDataset:
    """Parse a dataset CSV written by :func:`save_dataset`.

    Raises :class:`DataError` naming the offending line for ragged rows,
    non-numeric fields, or labels outside ``[0, expected_classes)``.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise DataError(f"{path}: empty file")
    header = raw[0].split(",")
    if header[0] != CSV_HEADER_PREFIX or header[1:] != [f"f{i}" for i in range(len(header) - 1)]:
        raise DataError(f"{path}: line 1: malformed header {raw[0]!r}")
    d = len(header) - 1
    if d < 1:
        raise DataError(f"{path}: line 1: header declares no feature columns")
    labels, rows = [], []
    for lineno, line in enumerate(raw[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != d + 1:
            raise DataError(f"{path}: line {lineno}: expected {d + 1} fields, got {len(parts)}")
        try:
            lab = int(parts[0])
            row = [float(v) for v in parts[1:]]
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from None
        if lab < 0 or (expected_classes is not None and lab >= expected_classes):
            raise DataError(f"{path}: line {lineno}: label {lab} out of range")
        labels.append(lab)
        rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")
    k = expected_classes if expected_classes is not None else max(labels) + 1
    return FeatureDataset(
        features=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64),
        num_classes=k,
    )


def split(
    ds: FeatureDataset,
    fractions: tuple[float, float, float],
    seed: int,
) -> tuple[FeatureDataset, FeatureDataset, FeatureDataset]:
    """Stratified (train, val, unlabeled) split.

    Every split with a positive fraction receives at least one sample of
    every class, otherwise a :class:`DataError` is raised.  The unlabeled
    part comes back with ``pseudo=True``: its ``labels`` start unassigned
    (-1) and the ground truth is kept in ``true_labels``.
    """
    fr = np.asarray(fractions, dtype=np.float64)
    if fr.shape != (3,) or np.any(fr < 0) or abs(fr.sum() - 1.0) > 1e-9:
        raise DataError("fractions must be three nonnegative values summing to 1")
    rng = np.random.default_rng(seed)
    buckets: list[list[np.ndarray]] = [[], [], []]
    for k in range(ds.num_classes):
        idx = np.flatnonzero(ds.labels == k)
        n_k = idx.size
        active = [s for s in range(3) if fr[s] > 0]
        if n_k < len(active):
            raise DataError(f"class {k} too small to appear in all requested splits")
        perm = idx[rng.permutation(n_k)]
        counts = np.floor(fr * n_k).astype(int)
        for s in range(3):
            if fr[s] > 0 and counts[s] == 0:
                counts[s] = 1
        # hand remaining samples to the largest fractional remainders
        while counts.sum() < n_k:
            rem = fr * n_k - counts
            rem[fr == 0] = -np.inf
            counts[int(np.argmax(rem))] += 1
        while counts.sum() > n_k:
            rem = fr * n_k - counts
            order = [s for s in active if counts[s] > 1]
            counts[min(order, key=lambda s: rem[s])] -= 1
        start = 0
        for s in range(3):
            buckets[s].append(perm[start : start + counts[s]])
            start += counts[s]

    def take(parts: list[np.ndarray], pseudo: bool) -> FeatureDataset:
        rows = np.sort(np.concatenate(parts)) if parts else np.array([], dtype=np.int64)
        truth = ds.labels[rows]
        if pseudo:
            return FeatureDataset(
                features=ds.features[rows],
                labels=np.full(rows.size, -1, dtype=np.int64),
                num_classes=ds.num_classes,
                pseudo=True,
                true_labels=truth,
            )
        return FeatureDataset(features=ds.features[rows], labels=truth, num_classes=ds.num_classes)

    return take(buckets[0], False), take(buckets[1], False), take(buckets[2], True)
