"""Standardization, PCA, k-means codebooks and discretization.

The discretizers turn continuous 12-component block descriptors into
small integer labels. Scalar codebooks (one per descriptor component)
are the default; a single vector codebook per block is the alternative.
All fitting happens on training-split data only.
"""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_random_state


def _as_matrix(data, name: str = "data") -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty 2-D matrix, got shape {arr.shape}")
    return arr


class Standardizer(TransformerMixin, BaseEstimator):
    """Column-wise (x - mean) / std with population (divisor N) std."""

    def fit(self, X, y=None):
        X = _as_matrix(X)
        if X.shape[0] < 2:
            raise ValueError("standardization needs at least 2 rows")
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0)
        zero = np.nonzero(self.scale_ == 0.0)[0]
        if zero.size:
            raise ValueError(f"column {int(zero[0])} has zero variance")
        return self

    def transform(self, X):
        X = _as_matrix(X)
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, X):
        X = _as_matrix(X)
        return X * self.scale_ + self.mean_


class CorrelationPca(TransformerMixin, BaseEstimator):
    """PCA via eigendecomposition of the correlation matrix.

    Expects standardized input, for which the correlation matrix equals
    the covariance matrix. Components are orthonormal rows sorted by
    decreasing eigenvalue; each is sign-fixed so its largest-magnitude
    entry is positive.
    """

    def __init__(self, n_components: int | None = None):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = _as_matrix(X)
        n, p = X.shape
        q = p if self.n_components is None else int(self.n_components)
        if not 1 <= q <= p:
            raise ValueError(f"n_components must be in [1, {p}], got {q}")
        corr = (X.T @ X) / n
        eigvals, eigvecs = np.linalg.eigh(corr)
        order = np.argsort(eigvals)[::-1]
        eigvals = np.clip(eigvals[order], 0.0, None)
        eigvecs = eigvecs[:, order]
        for j in range(p):
            pivot = np.argmax(np.abs(eigvecs[:, j]))
            if eigvecs[pivot, j] < 0:
                eigvecs[:, j] = -eigvecs[:, j]
        self.explained_variance_ = eigvals[:q]
        self.components_ = eigvecs[:, :q].T
        self.n_features_in_ = p
        return self

    def transform(self, X):
        X = _as_matrix(X)
        return X @ self.components_.T

    def inverse_transform(self, X):
        X = _as_matrix(X)
        return X @ self.components_


@dataclass(frozen=True)
class Codebook:
    """k-means centroids plus the fit metadata the text format records."""

    centroids: np.ndarray
    seed: int
    inertia: float

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


def _assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-centroid labels and squared distances; ties -> lowest index.

    Distances use explicit squared differences (chunked) so that exact
    ties are preserved and broken by argmin's lowest-index rule.
    """
    n = points.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dist2 = np.empty(n, dtype=np.float64)
    step = max(1, 2_000_000 // max(1, centroids.shape[0] * centroids.shape[1]))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        d2 = ((points[lo:hi, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels[lo:hi] = np.argmin(d2, axis=1)
        dist2[lo:hi] = d2[np.arange(hi - lo), labels[lo:hi]]
    return labels, dist2


def _lloyd(points: np.ndarray, init: np.ndarray, max_iters: int) -> tuple[np.ndarray, np.ndarray, float, int]:
    """Lloyd iterations from given centroids until assignment fixpoint."""
    centroids = init.copy()
    k = centroids.shape[0]
    labels, dist2 = _assign(points, centroids)
    inertia = float(dist2.sum())
    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        for j in range(k):
            member = labels == j
            if member.any():
                centroids[j] = points[member].mean(axis=0)
            else:
                far = int(np.argmax(dist2))
                centroids[j] = points[far]
                dist2[far] = 0.0
        new_labels, dist2 = _assign(points, centroids)
        new_inertia = float(dist2.sum())
        assert new_inertia <= inertia * (1 + 1e-12) + 1e-12, "inertia increased"
        converged = np.array_equal(new_labels, labels)
        labels = new_labels
        inertia = new_inertia
        if converged:
            break
    return labels, centroids, inertia, n_iter


def kmeans(points, k: int, seed: int = 0, max_iters: int = 100, n_init: int = 5):
    """Seeded k-means: (assignments, Codebook, inertia).

    Initial centroids are k distinct points drawn uniformly without
    replacement; of `n_init` restarts the lowest-inertia fit wins.
    """
    pts = _as_matrix(points, "points")
    k = int(k)
    if k < 1:
        raise ValueError(f"cluster count must be >= 1, got {k}")
    distinct = np.unique(pts, axis=0)
    if k > distinct.shape[0]:
        raise ValueError(
            f"cluster count {k} exceeds the {distinct.shape[0]} distinct points"
        )
    rng = check_random_state(seed)
    best = None
    for _ in range(n_init):
        idx = rng.choice(distinct.shape[0], size=k, replace=False)
        labels, centroids, inertia, n_iter = _lloyd(pts, distinct[idx], max_iters)
        if best is None or inertia < best[2]:
            best = (labels, centroids, inertia, n_iter)
    labels, centroids, inertia, n_iter = best
    return labels, Codebook(centroids=centroids, seed=int(seed), inertia=inertia), inertia


class KMeansQuantizer(BaseEstimator):
    """Estimator wrapper around the seeded k-means routine."""

    def __init__(self, n_clusters: int = 22, n_init: int = 5, max_iter: int = 100, random_state=None):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        seed = 0 if self.random_state is None else self.random_state
        labels, cb, inertia = kmeans(
            X, self.n_clusters, seed=seed, max_iters=self.max_iter, n_init=self.n_init
        )
        self.cluster_centers_ = cb.centroids
        self.labels_ = labels
        self.inertia_ = inertia
        self.codebook_ = cb
        return self

    def predict(self, X):
        return quantize_batch(X, self.codebook_)


def silhouette_values(points, labels) -> np.ndarray:
    """Per-point silhouette s = (b - a) / max(a, b).

    a is the mean distance to the point's own cluster (excluding
    itself), b the smallest mean distance to another cluster. Points in
    singleton clusters score 0, as do points with a = b = 0.
    """
    pts = _as_matrix(points, "points")
    labels = np.asarray(labels)
    if labels.shape != (pts.shape[0],):
        raise ValueError("one label per point required")
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ValueError("silhouette undefined for fewer than 2 clusters")
    n = pts.shape[0]
    dist = np.sqrt(np.maximum(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2), 0.0))
    scores = np.zeros(n)
    masks = {c: labels == c for c in uniq}
    sizes = {c: int(masks[c].sum()) for c in uniq}
    for i in range(n):
        own = labels[i]
        if sizes[own] == 1:
            continue
        a = dist[i, masks[own]].sum() / (sizes[own] - 1)
        b = min(dist[i, masks[c]].mean() for c in uniq if c != own)
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return scores


def select_k(points, k_range, seed: int = 0) -> int:
    """Cluster count with the best mean silhouette over a range.

    Ties go to the candidate with fewer negative-silhouette points,
    then to the smaller count.
    """
    candidates = sorted(int(k) for k in k_range)
    if not candidates:
        raise ValueError("empty candidate range")
    best_k, best_key = None, None
    for k in candidates:
        labels, _, _ = kmeans(points, k, seed=seed)
        scores = silhouette_values(points, labels)
        key = (-float(scores.mean()), int((scores < 0).sum()), k)
        if best_key is None or key < best_key:
            best_k, best_key = k, key
    return best_k


def quantize_vector(v, cb: Codebook) -> int:
    """Index of the nearest centroid; ties break to the lowest index."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.shape[0] != cb.dim:
        raise ValueError(f"vector has dimension {v.shape[0]}, codebook expects {cb.dim}")
    d2 = ((cb.centroids - v[None, :]) ** 2).sum(axis=1)
    return int(np.argmin(d2))


def quantize_batch(X, cb: Codebook) -> np.ndarray:
    """Vectorized nearest-centroid labels for an N x dim matrix."""
    X = _as_matrix(X)
    if X.shape[1] != cb.dim:
        raise ValueError(f"matrix has dimension {X.shape[1]}, codebook expects {cb.dim}")
    labels, _ = _assign(X, cb.centroids)
    return labels


def save_codebook(cb: Codebook, path) -> None:
    """Write a codebook as versioned text, 9 significant digits."""
    lines = [
        "wordbn/codebook 1",
        f"k {cb.k}",
        f"dim {cb.dim}",
        f"seed {cb.seed}",
        f"inertia {cb.inertia:.9g}",
    ]
    for row in cb.centroids:
        lines.append(" ".join(format(x, ".9g") for x in row))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_codebook(path) -> Codebook:
    """Read a codebook written by save_codebook."""
    with open(path, encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith("wordbn/codebook "):
        raise ValueError("not a codebook file")
    version = lines[0].split()[-1]
    if version != "1":
        raise ValueError(f"unsupported codebook version {version}")
    header = {}
    for ln in lines[1:5]:
        key, val = ln.split(maxsplit=1)
        header[key] = val
    k, dim = int(header["k"]), int(header["dim"])
    centroids = np.array([[float(x) for x in ln.split()] for ln in lines[5 : 5 + k]])
    if centroids.shape != (k, dim):
        raise ValueError(f"expected {k} centroids of dimension {dim}")
    return Codebook(centroids=centroids, seed=int(header["seed"]), inertia=float(header["inertia"]))


class AttributeDiscretizer(BaseEstimator):
    """Per-component scalar codebooks shared across blocks.

    Fitting sees an N x m matrix of block descriptors (one row per
    block) and learns one scalar codebook per column; transform maps
    each entry to its codebook label, preserving shape.
    """

    def __init__(self, n_clusters: int = 22, n_init: int = 5, max_iter: int = 100, random_state=None):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = _as_matrix(X)
        seed = 0 if self.random_state is None else int(self.random_state)
        self.codebooks_ = []
        self.cardinalities_ = []
        for j in range(X.shape[1]):
            col = X[:, j : j + 1]
            k = min(self.n_clusters, np.unique(col, axis=0).shape[0])
            _, cb, _ = kmeans(col, k, seed=seed + j, max_iters=self.max_iter, n_init=self.n_init)
            self.codebooks_.append(cb)
            self.cardinalities_.append(k)
        return self

    def transform(self, X) -> np.ndarray:
        X = _as_matrix(X)
        if X.shape[1] != len(self.codebooks_):
            raise ValueError(
                f"matrix has {X.shape[1]} columns, discretizer expects {len(self.codebooks_)}"
            )
        out = np.empty(X.shape, dtype=np.int64)
        for j, cb in enumerate(self.codebooks_):
            out[:, j] = quantize_batch(X[:, j : j + 1], cb)
        return out


class VectorDiscretizer(BaseEstimator):
    """One vector codebook mapping each block descriptor to one label."""

    def __init__(self, n_clusters: int = 22, n_init: int = 5, max_iter: int = 100, random_state=None):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = _as_matrix(X)
        seed = 0 if self.random_state is None else int(self.random_state)
        k = min(self.n_clusters, np.unique(X, axis=0).shape[0])
        _, self.codebook_, _ = kmeans(X, k, seed=seed, max_iters=self.max_iter, n_init=self.n_init)
        self.cardinalities_ = [k]
        return self

    def transform(self, X) -> np.ndarray:
        return quantize_batch(X, self.codebook_)[:, None]
