"""Discrete Bayesian-network classifiers over block attributes.

Three augmenting structures are supported: none (independent
attributes given the class), tree (each non-root attribute gains one
attribute parent from a maximum spanning tree weighted by
class-conditional mutual information), and forest (the tree pruned to
its strongly dependent edges, with the root chosen by class relevance).
Probabilities come from add-one smoothing, so no CPT entry is zero, and
posterior accumulation runs in log space.
"""

import math

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils import check_random_state

from ._validation import check_label_matrix


def laplace_cpt(counts, cardinality: int) -> np.ndarray:
    """Add-one smoothed probability row (count + 1)/(total + cardinality)."""
    cardinality = int(cardinality)
    if cardinality < 1:
        raise ValueError(f"cardinality must be >= 1, got {cardinality}")
    counts = np.asarray(counts, dtype=np.float64)
    if counts.shape != (cardinality,):
        raise ValueError(f"expected {cardinality} counts, got shape {counts.shape}")
    if (counts < 0).any():
        raise ValueError("counts must be non-negative")
    return (counts + 1.0) / (counts.sum() + cardinality)


def _joint_counts(*columns) -> tuple[np.ndarray, list[np.ndarray]]:
    """Contingency table over the given label columns."""
    cols = [np.asarray(c).ravel() for c in columns]
    uniques = [np.unique(c) for c in cols]
    shape = tuple(u.size for u in uniques)
    idx = [np.searchsorted(u, c) for u, c in zip(uniques, cols)]
    flat = np.ravel_multi_index(idx, shape)
    counts = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)
    return counts.astype(np.float64), uniques


def mutual_information(x, y) -> float:
    """Plug-in mutual information I(X; Y) in nats, clamped to >= 0."""
    counts, _ = _joint_counts(x, y)
    n = counts.sum()
    if n < 1:
        raise ValueError("at least one sample required")
    pxy = counts / n
    px = pxy.sum(axis=1, keepdims=True)
    py = pxy.sum(axis=0, keepdims=True)
    nz = pxy > 0
    mi = float(np.sum(pxy[nz] * np.log(pxy[nz] / (px @ py)[nz])))
    return max(mi, 0.0)


def conditional_mutual_information(x, y, z) -> float:
    """Plug-in conditional mutual information I(X; Y | Z) in nats.

    Sum over z of p(z) times the mutual information of x and y within
    the z-slice; tiny negatives from rounding clamp to 0.
    """
    counts, _ = _joint_counts(x, y, z)
    n = counts.sum()
    if n < 1:
        raise ValueError("at least one sample required")
    pxyz = counts / n
    pz = pxyz.sum(axis=(0, 1), keepdims=True)
    pxz = pxyz.sum(axis=1, keepdims=True)
    pyz = pxyz.sum(axis=0, keepdims=True)
    nz = pxyz > 0
    # wherever pxyz > 0 both marginals are positive, so the slice is safe
    ratio = (pxyz * pz)[nz] / (pxz * pyz)[nz]
    cmi = float(np.sum(pxyz[nz] * np.log(ratio)))
    return max(cmi, 0.0)


def _max_spanning_tree(weights: np.ndarray) -> list[tuple[int, int]]:
    """Maximum spanning tree edges of a complete weighted graph.

    Greedy over edges sorted by descending weight; ties resolve in
    lexicographic vertex-pair order so the result is deterministic.
    """
    m = weights.shape[0]
    edges = sorted(
        ((i, j) for i in range(m) for j in range(i + 1, m)),
        key=lambda e: (-weights[e[0], e[1]], e[0], e[1]),
    )
    parent = list(range(m))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    tree = []
    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            tree.append((i, j))
            if len(tree) == m - 1:
                break
    return tree


def _orient_away_from(undirected: list[tuple[int, int]], m: int, anchors) -> list[tuple[int, int]]:
    """Direct edges away from each component's anchor vertex.

    `anchors` lists preferred anchor vertices in priority order; a
    component without any listed anchor uses its lowest-index vertex.
    """
    adj = {i: [] for i in range(m)}
    for i, j in undirected:
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * m
    directed = []
    components = []
    for start in range(m):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        queue = [start]
        while queue:
            u = queue.pop()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        components.append(sorted(comp))
    for comp in components:
        anchor = next((a for a in anchors if a in comp), comp[0])
        frontier = [anchor]
        visited = {anchor}
        while frontier:
            u = frontier.pop()
            for v in adj[u]:
                if v not in visited:
                    visited.add(v)
                    directed.append((u, v))
                    frontier.append(v)
    return directed


class DiscreteBayesClassifier(ClassifierMixin, BaseEstimator):
    """Bayes classifier over discrete attributes with optional augmenting edges.

    Parameters
    ----------
    structure : {"none", "tree", "forest"}
        Attribute-dependency structure: independent attributes, a
        spanning tree over class-conditional mutual information, or that
        tree pruned to edges above the average dependence.
    root : int or None
        Tree root attribute; None draws one uniformly from the seeded
        generator. Ignored for "none"; the forest root is always the
        attribute most informative about the class.
    cardinalities : sequence of int or None
        Per-attribute label counts; inferred from the data when None.
    noise_floor : "auto", float or None
        Extra pruning threshold for "forest": edges whose dependence is
        explicable as finite-sample noise are dropped. "auto" uses twice
        the expected plug-in estimate under independence,
        (card_i - 1)(card_j - 1) * n_classes / n_samples.
    """

    def __init__(
        self,
        structure: str = "none",
        root: int | None = None,
        cardinalities=None,
        classes=None,
        noise_floor="auto",
        random_state=None,
    ):
        self.structure = structure
        self.root = root
        self.cardinalities = cardinalities
        self.classes = classes
        self.noise_floor = noise_floor
        self.random_state = random_state

    def _resolved_cardinalities(self, X: np.ndarray) -> np.ndarray:
        if self.cardinalities is None:
            return X.max(axis=0) + 1
        cards = np.asarray(self.cardinalities, dtype=np.int64)
        if cards.shape != (X.shape[1],):
            raise ValueError(
                f"expected {X.shape[1]} cardinalities, got shape {cards.shape}"
            )
        return cards

    def fit(self, X, y):
        X = check_label_matrix(X)
        y = np.asarray(y).ravel()
        if y.shape[0] != X.shape[0]:
            raise ValueError("X and y disagree on sample count")
        if self.structure not in ("none", "tree", "forest"):
            raise ValueError(f"unknown structure {self.structure!r}")
        n, m = X.shape
        cards = self._resolved_cardinalities(X)
        if (X >= cards[None, :]).any():
            raise ValueError("attribute label out of range")
        if self.classes is None:
            self.classes_ = np.unique(y)
        else:
            self.classes_ = np.asarray(sorted(self.classes))
            missing = np.setdiff1d(y, self.classes_)
            if missing.size:
                raise ValueError(f"labels {missing.tolist()} not in declared classes")
        ci = np.searchsorted(self.classes_, y)
        counts_per_class = np.bincount(ci, minlength=self.classes_.size)
        if (counts_per_class == 0).any():
            absent = self.classes_[counts_per_class == 0]
            raise ValueError(f"class {absent[0]} has no training samples")

        self.cardinalities_ = cards
        self.edges_ = self._learn_edges(X, ci, cards)
        parent = np.full(m, -1, dtype=np.int64)
        for p, c in self.edges_:
            parent[c] = p
        self.parent_ = parent

        n_classes = self.classes_.size
        self.class_log_prior_ = np.log(laplace_cpt(counts_per_class, n_classes))
        self.cpts_ = []
        for i in range(m):
            p = parent[i]
            if p < 0:
                table = np.empty((n_classes, cards[i]))
                for c in range(n_classes):
                    sel = X[ci == c, i]
                    table[c] = laplace_cpt(np.bincount(sel, minlength=cards[i]), cards[i])
            else:
                table = np.empty((n_classes, cards[p], cards[i]))
                for c in range(n_classes):
                    rows = X[ci == c]
                    for v in range(cards[p]):
                        sel = rows[rows[:, p] == v, i]
                        table[c, v] = laplace_cpt(
                            np.bincount(sel, minlength=cards[i]), cards[i]
                        )
            self.cpts_.append(table)
        return self

    def _learn_edges(self, X, ci, cards) -> list[tuple[int, int]]:
        m = X.shape[1]
        if self.structure == "none":
            self.root_ = None
            return []
        if m == 1:
            # A spanning tree over one vertex has no edges, so tree and
            # forest structures degenerate to attribute independence.
            self.root_ = 0
            return []
        weights = np.zeros((m, m))
        for i in range(m):
            for j in range(i + 1, m):
                w = conditional_mutual_information(X[:, i], X[:, j], ci)
                weights[i, j] = weights[j, i] = w
        tree = _max_spanning_tree(weights)
        if self.structure == "tree":
            if self.root is None:
                root = int(check_random_state(self.random_state).randint(m))
            else:
                root = int(self.root)
                if not 0 <= root < m:
                    raise ValueError(f"root {root} out of range for {m} attributes")
            self.root_ = root
            return _orient_away_from(tree, m, [root])
        # forest: root by class relevance, edges thresholded on the
        # average pairwise dependence and the finite-sample noise floor
        class_mi = [mutual_information(X[:, i], ci) for i in range(m)]
        root = int(np.argmax(class_mi))
        self.root_ = root
        i_avg = weights.sum() / (m * (m - 1))
        n = X.shape[0]
        kept = []
        for i, j in tree:
            if self.noise_floor is None:
                floor = 0.0
            elif self.noise_floor == "auto":
                floor = (cards[i] - 1) * (cards[j] - 1) * self.classes_.size / n
            else:
                floor = float(self.noise_floor)
            if weights[i, j] >= i_avg and weights[i, j] >= floor:
                kept.append((i, j))
        return _orient_away_from(kept, m, [root])

    def predict_log_proba(self, X) -> np.ndarray:
        X = check_label_matrix(X, n_attributes=len(self.cpts_))
        if (X >= self.cardinalities_[None, :]).any():
            raise ValueError("attribute label out of range")
        n = X.shape[0]
        scores = np.tile(self.class_log_prior_[None, :], (n, 1))
        for i, table in enumerate(self.cpts_):
            p = self.parent_[i]
            if p < 0:
                scores += np.log(table[:, X[:, i]]).T
            else:
                scores += np.log(table[:, X[:, p], X[:, i]]).T
        norm = scores - scores.max(axis=1, keepdims=True)
        log_z = np.log(np.exp(norm).sum(axis=1, keepdims=True)) + scores.max(axis=1, keepdims=True)
        return scores - log_z

    def predict_proba(self, X) -> np.ndarray:
        return np.exp(self.predict_log_proba(X))

    def predict(self, X) -> np.ndarray:
        proba = self.predict_log_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]


def build_nb(X, y, cardinalities=None, classes=None) -> DiscreteBayesClassifier:
    """Classifier with independent attributes given the class."""
    return DiscreteBayesClassifier(
        structure="none", cardinalities=cardinalities, classes=classes
    ).fit(X, y)


def build_tan(X, y, root=None, cardinalities=None, classes=None, random_state=None) -> DiscreteBayesClassifier:
    """Classifier augmented with a maximum spanning tree over attributes."""
    return DiscreteBayesClassifier(
        structure="tree",
        root=root,
        cardinalities=cardinalities,
        classes=classes,
        random_state=random_state,
    ).fit(X, y)


def build_fan(X, y, cardinalities=None, classes=None, noise_floor="auto") -> DiscreteBayesClassifier:
    """Classifier augmented with the pruned dependence forest."""
    return DiscreteBayesClassifier(
        structure="forest",
        cardinalities=cardinalities,
        classes=classes,
        noise_floor=noise_floor,
    ).fit(X, y)


def block_posterior(model: DiscreteBayesClassifier, attributes) -> np.ndarray:
    """Normalized class posterior for one block's attribute labels."""
    attrs = np.asarray(attributes).ravel()[None, :]
    return model.predict_proba(attrs)[0]


def image_posterior(block_posteriors) -> np.ndarray:
    """Component-wise mean of the per-block class posteriors."""
    rows = [np.asarray(p, dtype=np.float64).ravel() for p in block_posteriors]
    if not rows:
        raise ValueError("at least one block posterior required")
    width = rows[0].shape[0]
    if any(r.shape[0] != width for r in rows):
        raise ValueError("block posteriors disagree on class count")
    return np.mean(rows, axis=0)


def decide(dist, classes=None):
    """Highest-probability class; ties break to the lowest class index.

    Without an explicit class list, classes are numbered from 1 in
    distribution order.
    """
    dist = np.asarray(dist, dtype=np.float64).ravel()
    if dist.size == 0:
        raise ValueError("empty distribution")
    pos = int(np.argmax(dist))
    if classes is None:
        return pos + 1
    return classes[pos]


class BlockBayesEnsemble(ClassifierMixin, BaseEstimator):
    """One Bayes classifier per block position, fused by averaging.

    fit consumes a list of per-block label matrices (all N x m, one per
    block position) and a shared class vector; prediction averages the
    per-block posteriors and applies the lowest-index tie rule.
    """

    def __init__(
        self,
        structure: str = "forest",
        root: int | None = None,
        cardinalities=None,
        noise_floor="auto",
        random_state=None,
    ):
        self.structure = structure
        self.root = root
        self.cardinalities = cardinalities
        self.noise_floor = noise_floor
        self.random_state = random_state

    def fit(self, block_labels, y):
        if not block_labels:
            raise ValueError("at least one block required")
        y = np.asarray(y).ravel()
        self.classes_ = np.unique(y)
        self.block_models_ = []
        for t, labels in enumerate(block_labels):
            model = DiscreteBayesClassifier(
                structure=self.structure,
                root=self.root,
                cardinalities=self.cardinalities,
                classes=self.classes_.tolist(),
                noise_floor=self.noise_floor,
                random_state=None if self.random_state is None else self.random_state + t,
            )
            self.block_models_.append(model.fit(labels, y))
        return self

    def predict_proba(self, block_labels) -> np.ndarray:
        if len(block_labels) != len(self.block_models_):
            raise ValueError(
                f"got {len(block_labels)} blocks, model expects {len(self.block_models_)}"
            )
        posteriors = [m.predict_proba(lab) for m, lab in zip(self.block_models_, block_labels)]
        return np.mean(posteriors, axis=0)

    def predict(self, block_labels) -> np.ndarray:
        proba = self.predict_proba(block_labels)
        return self.classes_[np.argmax(proba, axis=1)]
