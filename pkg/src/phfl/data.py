"""Synthetic datasets, CSV ingestion and Dirichlet non-IID partitioning."""
import csv
import json
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import IoError, TooFewSamples


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    n_classes: int

    def __len__(self):
        return len(self.y)

    def subset(self, idx):
        return Dataset(self.X[idx], self.y[idx], self.n_classes)


@dataclass(frozen=True)
class DataShard:
    """A client's local data, kept as indices into the parent dataset."""
    indices: np.ndarray
    X: np.ndarray
    y: np.ndarray
    n_classes: int

    def __len__(self):
        return len(self.y)

    @property
    def label_hist(self):
        return np.bincount(self.y, minlength=self.n_classes) / len(self.y)


def make_gaussian_mixture(n_samples, n_features=32, n_classes=10, seed=0, class_sep=1.0,
                          clusters_per_class=2, noise=1.0):
    """Balanced classes, each a mixture of Gaussian blobs with random centers."""
    g = rng.stream(seed, rng.DATASET)
    centers = g.normal(scale=class_sep, size=(n_classes, clusters_per_class, n_features))
    y = np.arange(n_samples) % n_classes
    y = y[g.permutation(n_samples)]
    which = g.integers(clusters_per_class, size=n_samples)
    X = centers[y, which] + noise * g.normal(size=(n_samples, n_features))
    return Dataset(X.astype(np.float64), y.astype(np.int64), n_classes)


def train_test_split(dataset, test_fraction, seed):
    n = len(dataset)
    perm = rng.stream(seed, rng.DATASET, 1).permutation(n)
    n_test = int(round(test_fraction * n))
    return dataset.subset(np.sort(perm[n_test:])), dataset.subset(np.sort(perm[:n_test]))


def load_csv(path):
    """Header row of feature names followed by a final ``label`` column."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise IoError(f"{path}: expected a header and at least one row")
    body = np.array(rows[1:], dtype=float)
    X = body[:, :-1]
    labels = body[:, -1].astype(np.int64)
    uniq, y = np.unique(labels, return_inverse=True)
    return Dataset(X, y.astype(np.int64), len(uniq))


def dirichlet_partition(dataset, n_clients, alpha, seed):
    """Split ``dataset`` into ``n_clients`` disjoint, nonempty shards.

    Each client draws label proportions pi ~ Dir(alpha) and receives an
    equal share of samples whose label counts follow pi (largest-remainder
    rounding).  Clients are filled in a random order; when a label pool runs
    dry the client's remaining demand is spread over the labels still
    available in proportion to pi (or to the pool sizes if pi puts no mass
    there).
    """
    n = len(dataset)
    C = dataset.n_classes
    if n < n_clients:
        raise TooFewSamples(f"{n} samples for {n_clients} clients")
    if len(np.unique(dataset.y)) < 2:
        raise TooFewSamples("dataset must cover at least two classes")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    g = rng.stream(seed, rng.PARTITION)
    pools = [list(g.permutation(np.flatnonzero(dataset.y == c))) for c in range(C)]
    sizes = np.full(n_clients, n // n_clients)
    sizes[: n % n_clients] += 1
    props = g.dirichlet(np.full(C, float(alpha)), size=n_clients)
    order = g.permutation(n_clients)
    assigned = [None] * n_clients
    for u in order:
        need = int(sizes[u])
        take = np.zeros(C, dtype=np.int64)
        weights = props[u].copy()
        while need > 0:
            avail = np.array([len(pools[c]) - take[c] for c in range(C)], dtype=float)
            w = np.where(avail > 0, weights, 0.0)
            if w.sum() <= 0:
                w = avail.copy()
            counts = _largest_remainder(need * w / w.sum(), need)
            counts = np.minimum(counts, avail.astype(np.int64))
            if counts.sum() == 0:
                counts[int(np.argmax(w))] = 1
            take += counts
            need -= int(counts.sum())
        idx = []
        for c in range(C):
            k = int(take[c])
            idx.extend(pools[c][:k])
            pools[c] = pools[c][k:]
        assigned[u] = np.sort(np.array(idx, dtype=np.int64))
    return [DataShard(idx, dataset.X[idx], dataset.y[idx], C) for idx in assigned]


def _largest_remainder(x, total):
    base = np.floor(x).astype(np.int64)
    rest = total - int(base.sum())
    if rest > 0:
        frac = x - base
        base[np.argsort(-frac, kind="stable")[:rest]] += 1
    return base


def shard_manifest(shards):
    return [{"client": u, "size": len(s), "indices": s.indices.tolist(),
             "label_counts": np.bincount(s.y, minlength=s.n_classes).tolist()}
            for u, s in enumerate(shards)]


def write_manifest(shards, path):
    try:
        with open(path, "w") as fh:
            json.dump(shard_manifest(shards), fh)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
