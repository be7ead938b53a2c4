"""Coupled hidden Markov chains with exact inference and EM training.

Two hidden chains evolve jointly: each chain's state at time t depends
on both chains' states at t - 1, and each chain emits its own discrete
symbol stream. Exact inference collapses the pair of chains into a
single joint chain over Q1 * Q2 states and runs scaled forward-backward
there, which reproduces exact posterior propagation for this structure.

Per-class models are trained independently by EM and compared by
log-likelihood at classification time.
"""

import math
import time
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

_ROW_TOL = 1e-9


def _check_stochastic(name: str, table: np.ndarray, axis: int = -1) -> np.ndarray:
    table = np.asarray(table, dtype=np.float64)
    if (table < 0).any():
        raise ValueError(f"{name} contains negative entries")
    sums = table.sum(axis=axis)
    if not np.allclose(sums, 1.0, atol=_ROW_TOL):
        raise ValueError(f"{name} rows must sum to 1 (max deviation {np.abs(sums - 1).max():.3g})")
    return table / np.expand_dims(sums, axis)


class CoupledHmm:
    """Two coupled hidden chains with per-chain discrete emissions.

    Parameters are given per chain l in {0, 1}: pi[l][i] is the initial
    state distribution, A[l][i, j, k] = P(X_t^l = k | X_{t-1}^0 = i,
    X_{t-1}^1 = j), and B[l][j, k] = P(Y_t^l = k | X_t^l = j). Rows are
    validated to sum to 1 within 1e-9 and stored exactly normalized.
    """

    def __init__(self, pi, A, B):
        if len(pi) != 2 or len(A) != 2 or len(B) != 2:
            raise ValueError("expected parameters for exactly two chains")
        self.pi = tuple(_check_stochastic(f"pi[{l}]", pi[l]) for l in range(2))
        self.A = tuple(_check_stochastic(f"A[{l}]", A[l]) for l in range(2))
        self.B = tuple(_check_stochastic(f"B[{l}]", B[l]) for l in range(2))
        self.q1, self.q2 = self.pi[0].size, self.pi[1].size
        self.m1, self.m2 = self.B[0].shape[1], self.B[1].shape[1]
        if self.A[0].shape != (self.q1, self.q2, self.q1):
            raise ValueError(f"A[0] must have shape {(self.q1, self.q2, self.q1)}")
        if self.A[1].shape != (self.q1, self.q2, self.q2):
            raise ValueError(f"A[1] must have shape {(self.q1, self.q2, self.q2)}")
        if self.B[0].shape[0] != self.q1 or self.B[1].shape[0] != self.q2:
            raise ValueError("emission tables disagree with state counts")

    @classmethod
    def from_params(cls, pi, A, B) -> "CoupledHmm":
        return cls(pi, A, B)

    @classmethod
    def random_model(cls, q1: int, q2: int, m1: int, m2: int, random_state=None) -> "CoupledHmm":
        """Uniform-random positive rows, normalized; seeded."""
        rng = np.random.default_rng(random_state)

        def rows(*shape):
            raw = rng.uniform(0.1, 1.0, size=shape)
            return raw / raw.sum(axis=-1, keepdims=True)

        return cls(
            pi=(rows(q1), rows(q2)),
            A=(rows(q1, q2, q1), rows(q1, q2, q2)),
            B=(rows(q1, m1), rows(q2, m2)),
        )

    def joint_transition(self) -> np.ndarray:
        """Collapsed (Q1*Q2) x (Q1*Q2) transition matrix of the joint chain."""
        joint = self.A[0][:, :, :, None] * self.A[1][:, :, None, :]
        s = self.q1 * self.q2
        return joint.reshape(s, s)

    def joint_start(self) -> np.ndarray:
        return np.outer(self.pi[0], self.pi[1]).ravel()

    def _check_pair(self, y1, y2) -> tuple[np.ndarray, np.ndarray]:
        y1 = np.asarray(y1, dtype=np.int64).ravel()
        y2 = np.asarray(y2, dtype=np.int64).ravel()
        if y1.size == 0 or y1.size != y2.size:
            raise ValueError("observation streams must be non-empty and equal length")
        if (y1 < 0).any() or (y1 >= self.m1).any():
            raise ValueError(f"chain-1 symbol out of range [0, {self.m1})")
        if (y2 < 0).any() or (y2 >= self.m2).any():
            raise ValueError(f"chain-2 symbol out of range [0, {self.m2})")
        return y1, y2

    def infer(self, y1, y2) -> "InferenceResult":
        """Exact smoothing posteriors and log-likelihood for one pair."""
        y1, y2 = self._check_pair(y1, y2)
        alpha, beta, scale, emissions = _forward_backward_batch(
            self, y1[None, :], y2[None, :]
        )
        t_len = y1.size
        s = self.q1 * self.q2
        gamma = (alpha[0] * beta[0]).reshape(t_len, self.q1, self.q2)
        trans = self.joint_transition()
        xi1 = np.zeros((max(t_len - 1, 0), self.q1, self.q2, self.q1))
        xi2 = np.zeros((max(t_len - 1, 0), self.q1, self.q2, self.q2))
        for t in range(t_len - 1):
            weighted = emissions[0, :, t + 1] * beta[0, t + 1]
            xi = alpha[0, t][:, None] * trans * weighted[None, :] / scale[0, t + 1]
            xi4 = xi.reshape(self.q1, self.q2, self.q1, self.q2)
            xi1[t] = xi4.sum(axis=3)
            xi2[t] = xi4.sum(axis=2)
        return InferenceResult(
            log_likelihood=float(np.log(scale[0]).sum()),
            gamma=gamma,
            xi1=xi1,
            xi2=xi2,
        )

    def score(self, y1, y2) -> float:
        """Log-likelihood of one observation pair (forward pass only)."""
        y1, y2 = self._check_pair(y1, y2)
        _, _, scale, _ = _forward_backward_batch(self, y1[None, :], y2[None, :], backward=False)
        return float(np.log(scale[0]).sum())

    def sample(self, t_len: int, random_state=None, return_states: bool = False):
        """Draw one observation pair (optionally with hidden states)."""
        if t_len < 1:
            raise ValueError("sequence length must be >= 1")
        rng = np.random.default_rng(random_state)
        s1 = np.empty(t_len, dtype=np.int64)
        s2 = np.empty(t_len, dtype=np.int64)
        y1 = np.empty(t_len, dtype=np.int64)
        y2 = np.empty(t_len, dtype=np.int64)
        s1[0] = rng.choice(self.q1, p=self.pi[0])
        s2[0] = rng.choice(self.q2, p=self.pi[1])
        for t in range(1, t_len):
            s1[t] = rng.choice(self.q1, p=self.A[0][s1[t - 1], s2[t - 1]])
            s2[t] = rng.choice(self.q2, p=self.A[1][s1[t - 1], s2[t - 1]])
        for t in range(t_len):
            y1[t] = rng.choice(self.m1, p=self.B[0][s1[t]])
            y2[t] = rng.choice(self.m2, p=self.B[1][s2[t]])
        if return_states:
            return y1, y2, s1, s2
        return y1, y2


@dataclass(frozen=True)
class InferenceResult:
    """Smoothed posteriors from one forward-backward sweep.

    gamma[t, i, j] = P(X_t^0 = i, X_t^1 = j | obs);
    xi1[t, i, j, k] = P(X_t^0 = i, X_t^1 = j, X_{t+1}^0 = k | obs) and
    xi2 likewise for the second chain's successor state.
    """

    log_likelihood: float
    gamma: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray


def _forward_backward_batch(model: CoupledHmm, y1: np.ndarray, y2: np.ndarray, backward: bool = True):
    """Scaled forward(-backward) over a batch of equal-length pairs.

    Returns (alpha, beta, scale, emissions): alpha and beta are
    (N, T, S) scaled messages with gamma = alpha * beta; scale is
    (N, T) with log-likelihood = sum of log scale per row; emissions is
    (N, S, T). beta is None when the backward pass is skipped.
    """
    n, t_len = y1.shape
    s = model.q1 * model.q2
    trans = model.joint_transition()
    start = model.joint_start()
    em1 = model.B[0][:, y1]  # (Q1, N, T)
    em2 = model.B[1][:, y2]  # (Q2, N, T)
    emissions = (em1[:, None, :, :] * em2[None, :, :, :]).reshape(s, n, t_len)
    emissions = np.ascontiguousarray(emissions.transpose(1, 0, 2))  # (N, S, T)

    alpha = np.empty((n, t_len, s))
    scale = np.empty((n, t_len))
    cur = start[None, :] * emissions[:, :, 0]
    for t in range(t_len):
        if t > 0:
            cur = (alpha[:, t - 1] @ trans) * emissions[:, :, t]
        d = cur.sum(axis=1)
        if (d <= 0).any():
            raise ValueError("observation pair has zero likelihood under the model")
        scale[:, t] = d
        alpha[:, t] = cur / d[:, None]

    if not backward:
        return alpha, None, scale, emissions

    beta = np.empty((n, t_len, s))
    beta[:, t_len - 1] = 1.0
    for t in range(t_len - 2, -1, -1):
        weighted = emissions[:, :, t + 1] * beta[:, t + 1]
        beta[:, t] = (weighted @ trans.T) / scale[:, t + 1][:, None]
    return alpha, beta, scale, emissions


def joint_inference(model: CoupledHmm, pair) -> tuple[float, InferenceResult]:
    """Log-likelihood plus posteriors for one observation pair."""
    result = model.infer(pair[0], pair[1])
    return result.log_likelihood, result


def make_observation_pair(y1, y2) -> tuple[np.ndarray, np.ndarray]:
    """Equal-length pair; the shorter stream repeats its last symbol."""
    y1 = np.asarray(y1, dtype=np.int64).ravel()
    y2 = np.asarray(y2, dtype=np.int64).ravel()
    if y1.size == 0 or y2.size == 0:
        raise ValueError("observation streams must be non-empty")
    t_len = max(y1.size, y2.size)
    if y1.size < t_len:
        y1 = np.concatenate([y1, np.full(t_len - y1.size, y1[-1])])
    if y2.size < t_len:
        y2 = np.concatenate([y2, np.full(t_len - y2.size, y2[-1])])
    return y1, y2


def _group_by_length(data) -> dict[int, tuple[np.ndarray, np.ndarray, list[int]]]:
    groups: dict[int, list[tuple[np.ndarray, np.ndarray, int]]] = {}
    for idx, (y1, y2) in enumerate(data):
        y1 = np.asarray(y1, dtype=np.int64).ravel()
        y2 = np.asarray(y2, dtype=np.int64).ravel()
        if y1.size == 0 or y1.size != y2.size:
            raise ValueError("observation streams must be non-empty and equal length")
        groups.setdefault(y1.size, []).append((y1, y2, idx))
    packed = {}
    for t_len, items in groups.items():
        packed[t_len] = (
            np.stack([a for a, _, _ in items]),
            np.stack([b for _, b, _ in items]),
            [i for _, _, i in items],
        )
    return packed


def score_batch(model: CoupledHmm, data) -> np.ndarray:
    """Log-likelihood of each observation pair under the model."""
    out = np.empty(len(data))
    for t_len, (y1, y2, idxs) in _group_by_length(data).items():
        if (y1 >= model.m1).any() or (y2 >= model.m2).any() or (y1 < 0).any() or (y2 < 0).any():
            raise ValueError("symbol out of range")
        _, _, scale, _ = _forward_backward_batch(model, y1, y2, backward=False)
        out[idxs] = np.log(scale).sum(axis=1)
    return out


def em_step(model: CoupledHmm, data, floor: float = 0.0) -> tuple[CoupledHmm, float]:
    """One expectation-maximization sweep over the data.

    Accumulates expected transition, start and emission counts from the
    exact posteriors, renormalizes them into a new model, and returns
    the total log-likelihood of the data under the INPUT model. `floor`
    is added to every count cell before normalization; with the default
    0 the update is exact and a count-free row keeps the input model's
    probabilities.
    """
    if not data:
        raise ValueError("at least one observation pair required")
    q1, q2, m1, m2 = model.q1, model.q2, model.m1, model.m2
    s = q1 * q2
    trans = model.joint_transition()
    pi1_c = np.zeros(q1)
    pi2_c = np.zeros(q2)
    a1_c = np.zeros((q1, q2, q1))
    a2_c = np.zeros((q1, q2, q2))
    b1_c = np.zeros((q1, m1))
    b2_c = np.zeros((q2, m2))
    total_ll = 0.0
    for t_len, (y1, y2, _) in _group_by_length(data).items():
        if (y1 >= m1).any() or (y2 >= m2).any() or (y1 < 0).any() or (y2 < 0).any():
            raise ValueError("symbol out of range")
        alpha, beta, scale, emissions = _forward_backward_batch(model, y1, y2)
        total_ll += float(np.log(scale).sum())
        gamma = alpha * beta  # (N, T, S)
        g4 = gamma.reshape(gamma.shape[0], t_len, q1, q2)
        pi1_c += g4[:, 0].sum(axis=(0, 2))
        pi2_c += g4[:, 0].sum(axis=(0, 1))
        # emission counts: per symbol, marginal state occupancy
        g1 = g4.sum(axis=3)  # (N, T, Q1)
        g2 = g4.sum(axis=2)  # (N, T, Q2)
        for sym in range(m1):
            mask = y1 == sym
            if mask.any():
                b1_c[:, sym] += g1[mask].sum(axis=0)
        for sym in range(m2):
            mask = y2 == sym
            if mask.any():
                b2_c[:, sym] += g2[mask].sum(axis=0)
        for t in range(t_len - 1):
            weighted = emissions[:, :, t + 1] * beta[:, t + 1]  # (N, S)
            xi = np.einsum(
                "ns,st,nt->st", alpha[:, t], trans, weighted / scale[:, t + 1][:, None]
            )
            xi4 = xi.reshape(q1, q2, q1, q2)
            a1_c += xi4.sum(axis=3)
            a2_c += xi4.sum(axis=2)

    def normalize(counts: np.ndarray, fallback: np.ndarray) -> np.ndarray:
        counts = counts + floor
        sums = counts.sum(axis=-1, keepdims=True)
        out = np.where(sums > 0, counts / np.where(sums > 0, sums, 1.0), fallback)
        return out

    new = CoupledHmm(
        pi=(normalize(pi1_c, model.pi[0]), normalize(pi2_c, model.pi[1])),
        A=(normalize(a1_c, model.A[0]), normalize(a2_c, model.A[1])),
        B=(normalize(b1_c, model.B[0]), normalize(b2_c, model.B[1])),
    )
    return new, total_ll


def train_class_model(
    data,
    q1: int,
    q2: int | None = None,
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-4,
    restarts: int = 3,
    m1: int | None = None,
    m2: int | None = None,
    floor: float = 1e-6,
) -> CoupledHmm:
    """EM training from seeded random restarts; best final likelihood wins.

    Observation alphabet sizes default to the largest symbol seen plus
    one; passing m1/m2 explicitly keeps codebook sizes authoritative. A
    non-finite tolerance stops every restart after a single sweep.
    """
    if not data:
        raise ValueError("at least one observation pair required")
    if q2 is None:
        q2 = q1
    if q1 < 1 or q2 < 1:
        raise ValueError("state counts must be >= 1")
    seen_m1 = 1 + max(int(np.max(y1)) for y1, _ in data)
    seen_m2 = 1 + max(int(np.max(y2)) for _, y2 in data)
    m1 = seen_m1 if m1 is None else int(m1)
    m2 = seen_m2 if m2 is None else int(m2)
    if seen_m1 > m1 or seen_m2 > m2:
        raise ValueError("observed symbol exceeds the declared alphabet")
    rng = np.random.default_rng(seed)
    best_model, best_ll = None, -math.inf
    for _ in range(max(1, restarts)):
        model = CoupledHmm.random_model(q1, q2, m1, m2, random_state=rng)
        prev_ll = None
        ll = -math.inf
        for _ in range(max_iters):
            model, ll = em_step(model, data, floor=floor)
            if prev_ll is None:
                if math.isinf(tol) and tol > 0:
                    break
            elif abs(ll - prev_ll) < tol * max(abs(prev_ll), 1e-300):
                break
            prev_ll = ll
        final_ll = float(score_batch(model, data).sum())
        if final_ll > best_ll:
            best_model, best_ll = model, final_ll
    return best_model


@dataclass
class ClassModelBank:
    """One trained coupled-chain model per class."""

    classes: list
    models: list
    q_per_class: list

    def __post_init__(self):
        if not (len(self.classes) == len(self.models) == len(self.q_per_class)):
            raise ValueError("bank fields disagree on class count")
        if not self.classes:
            raise ValueError("bank must cover at least one class")


def classify(bank: ClassModelBank, pair) -> tuple[int, np.ndarray]:
    """Most likely class for one pair, plus all per-class log-likelihoods.

    Ties break to the lowest class index.
    """
    scores = np.array([m.score(pair[0], pair[1]) for m in bank.models])
    return bank.classes[int(np.argmax(scores))], scores


class CoupledHmmClassifier(ClassifierMixin, BaseEstimator):
    """Per-class coupled-chain models compared by log-likelihood.

    fit consumes a list of observation pairs and their class ids; each
    class's model trains independently with a class-specific seed
    offset so results do not depend on sample order across classes.
    """

    def __init__(
        self,
        n_states: int = 5,
        max_iters: int = 100,
        tol: float = 1e-4,
        restarts: int = 3,
        m1: int | None = None,
        m2: int | None = None,
        floor: float = 1e-6,
        random_state=None,
    ):
        self.n_states = n_states
        self.max_iters = max_iters
        self.tol = tol
        self.restarts = restarts
        self.m1 = m1
        self.m2 = m2
        self.floor = floor
        self.random_state = random_state

    def fit(self, X, y, n_states_per_class: dict | None = None):
        y = np.asarray(y).ravel()
        if len(X) != y.size:
            raise ValueError("X and y disagree on sample count")
        self.classes_ = np.unique(y)
        base_seed = 0 if self.random_state is None else int(self.random_state)
        m1 = self.m1 if self.m1 is not None else 1 + max(int(np.max(p[0])) for p in X)
        m2 = self.m2 if self.m2 is not None else 1 + max(int(np.max(p[1])) for p in X)
        self.models_ = []
        self.q_per_class_ = []
        for k, c in enumerate(self.classes_):
            pairs = [X[i] for i in np.nonzero(y == c)[0]]
            q = self.n_states if n_states_per_class is None else n_states_per_class[c]
            model = train_class_model(
                pairs,
                q1=q,
                q2=q,
                seed=base_seed + 7919 * k,
                max_iters=self.max_iters,
                tol=self.tol,
                restarts=self.restarts,
                m1=m1,
                m2=m2,
                floor=self.floor,
            )
            self.models_.append(model)
            self.q_per_class_.append(q)
        return self

    def bank(self) -> ClassModelBank:
        return ClassModelBank(
            classes=self.classes_.tolist(),
            models=list(self.models_),
            q_per_class=list(self.q_per_class_),
        )

    def decision_function(self, X) -> np.ndarray:
        scores = np.empty((len(X), self.classes_.size))
        for k, model in enumerate(self.models_):
            scores[:, k] = score_batch(model, X)
        return scores

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]


@dataclass(frozen=True)
class StateSelection:
    """Chosen state count per class plus the rate curves behind it."""

    q_per_class: dict
    rates: dict
    models: dict


def select_states(
    train_by_class: dict,
    validation_by_class: dict,
    q_range,
    seed: int = 0,
    m1: int | None = None,
    m2: int | None = None,
    **train_kwargs,
) -> StateSelection:
    """Per-class state count maximizing validation recognition rate.

    For every candidate Q a full bank is trained (all classes at that
    Q) and each class's validation samples are classified against it.
    Rate ties break to the cheaper measured inference time, then to the
    smaller Q. The rate curves are returned for plotting. Alphabet
    sizes default to the largest symbol seen; pass m1/m2 when the
    codebooks are larger than the symbols in use.
    """
    candidates = sorted(int(q) for q in q_range)
    if not candidates:
        raise ValueError("empty candidate range")
    classes = sorted(train_by_class)
    if sorted(validation_by_class) != classes:
        raise ValueError("train and validation disagree on classes")
    all_pairs = [p for c in classes for p in train_by_class[c]] + [
        p for c in classes for p in validation_by_class[c]
    ]
    if m1 is None:
        m1 = 1 + max(int(np.max(p[0])) for p in all_pairs)
    if m2 is None:
        m2 = 1 + max(int(np.max(p[1])) for p in all_pairs)
    models: dict[tuple, CoupledHmm] = {}
    rates: dict = {c: {} for c in classes}
    costs: dict = {c: {} for c in classes}
    for q in candidates:
        bank_models = []
        for k, c in enumerate(classes):
            model = train_class_model(
                train_by_class[c], q1=q, q2=q, seed=seed + 7919 * k, m1=m1, m2=m2, **train_kwargs
            )
            models[c, q] = model
            bank_models.append(model)
        for c in classes:
            val = validation_by_class[c]
            scores = np.empty((len(val), len(classes)))
            elapsed = 0.0
            for k in range(len(classes)):
                t0 = time.perf_counter()
                scores[:, k] = score_batch(bank_models[k], val)
                elapsed += time.perf_counter() - t0
            predicted = np.argmax(scores, axis=1)
            rates[c][q] = float(np.mean(predicted == classes.index(c)))
            costs[c][q] = elapsed
    q_per_class = {}
    for c in classes:
        q_per_class[c] = min(candidates, key=lambda q: (-rates[c][q], costs[c][q], q))
    return StateSelection(q_per_class=q_per_class, rates=rates, models=models)
