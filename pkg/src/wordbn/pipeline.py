"""End-to-end recognition pipelines wiring the feature, quantization
and classification stages together.

Two families share the front end (binarize, describe regions with the
12-component moment vector) and diverge afterwards: the static family
discretizes three block descriptors and fuses per-block Bayes
classifiers; the dynamic family quantizes sliding-window descriptors
into two symbol streams and compares per-class coupled hidden chains.

Every stage runs inside a context that tags errors with the stage
name, so a failing run reports where it died. Only the training split
(plus the validation split, when state selection is active) ever
reaches a learning step; the test split is first touched at scoring
time.
"""

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .bayesnet import BlockBayesEnsemble
from .config import PipelineConfig
from .coupled_hmm import (
    ClassModelBank,
    CoupledHmmClassifier,
    StateSelection,
    make_observation_pair,
    score_batch,
    select_states,
)
from .dataset import split_views
from .evaluation import EvaluationReport, compute_report
from .imaging import INK, binarize, sliding_windows, split_blocks
from .moments import EmptyInkError, feature_vector
from .quantize import (
    AttributeDiscretizer,
    CorrelationPca,
    KMeansQuantizer,
    Standardizer,
    VectorDiscretizer,
)

HU_COUNT = 7


class StageError(RuntimeError):
    """A pipeline stage failed; the message carries the stage tag."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@contextmanager
def pipeline_stage(name: str):
    """Tag any escaping error with the stage it came from."""
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, str(exc)) from exc


def region_descriptor(region, zernike_indices) -> np.ndarray:
    """Moment descriptor of one binarized region; zeros when no usable ink.

    Blank regions happen legitimately (padding windows, empty word
    margins), so they map to a deterministic all-zero descriptor
    instead of failing.
    """
    region = np.asarray(region)
    if not (region == INK).any():
        return np.zeros(HU_COUNT + len(zernike_indices))
    try:
        return feature_vector(region, zernike_indices)
    except EmptyInkError:
        return np.zeros(HU_COUNT + len(zernike_indices))


def block_feature_matrix(image, n_blocks: int, zernike_indices) -> np.ndarray:
    """Per-block descriptors of one image, shape (n_blocks, 12)."""
    binary = binarize(image)
    return np.stack(
        [region_descriptor(b, zernike_indices) for b in split_blocks(binary, n_blocks)]
    )


def window_feature_sequences(image, window: int, zernike_indices) -> tuple[np.ndarray, np.ndarray]:
    """Descriptor sequences for both scan axes of one image."""
    binary = binarize(image)
    horizontal = np.stack(
        [region_descriptor(w, zernike_indices) for w in sliding_windows(binary, "horizontal", window)]
    )
    vertical = np.stack(
        [region_descriptor(w, zernike_indices) for w in sliding_windows(binary, "vertical", window)]
    )
    return horizontal, vertical


@dataclass
class StaticPipelineResult:
    """Artifacts of one static-family run."""

    config: PipelineConfig
    ensemble: BlockBayesEnsemble
    discretizer: AttributeDiscretizer | VectorDiscretizer
    standardizer: Standardizer | None
    pca: CorrelationPca | None
    report: EvaluationReport
    test_truth: np.ndarray
    test_scores: np.ndarray


@dataclass
class DbnPipelineResult:
    """Artifacts of one dynamic-family run."""

    config: PipelineConfig
    bank: ClassModelBank
    quantizer_h: KMeansQuantizer
    quantizer_v: KMeansQuantizer
    report: EvaluationReport
    test_truth: np.ndarray
    test_scores: np.ndarray
    selection: StateSelection | None


def _checked_views(samples) -> dict:
    views = split_views(samples)
    if not views["train"]:
        raise ValueError("training split is empty")
    if not views["test"]:
        raise ValueError("test split is empty")
    return views


class _RowTransform:
    """Optional standardize-then-project step before discretization."""

    def __init__(self, standardizer, pca):
        self.standardizer = standardizer
        self.pca = pca

    def __call__(self, rows: np.ndarray) -> np.ndarray:
        if self.standardizer is not None:
            rows = self.standardizer.transform(rows)
        if self.pca is not None:
            rows = self.pca.transform(rows)
        return rows


def run_static_pipeline(samples, cfg: PipelineConfig) -> StaticPipelineResult:
    """Train and evaluate the block-ensemble family on split samples."""
    if cfg.classifier not in ("nb", "tan", "fan"):
        raise StageError("config", f"static pipeline needs classifier nb, tan or fan, got {cfg.classifier!r}")
    structure = {"nb": "none", "tan": "tree", "fan": "forest"}[cfg.classifier]
    indices = cfg.zernike_index_pairs

    with pipeline_stage("dataset"):
        views = _checked_views(samples)
        train, test = views["train"], views["test"]

    with pipeline_stage("features"):
        train_feats = np.stack(
            [block_feature_matrix(s.image, cfg.blocks, indices) for s in train]
        )
        test_feats = np.stack(
            [block_feature_matrix(s.image, cfg.blocks, indices) for s in test]
        )

    with pipeline_stage("quantize"):
        dim = train_feats.shape[2]
        train_rows = train_feats.reshape(-1, dim)
        standardizer = pca = None
        if cfg.pca_components > 0:
            standardizer = Standardizer().fit(train_rows)
            pca = CorrelationPca(cfg.pca_components).fit(standardizer.transform(train_rows))
        transform = _RowTransform(standardizer, pca)
        if cfg.discretization == "per-attribute":
            discretizer = AttributeDiscretizer(n_clusters=cfg.codebook_k, random_state=cfg.seed)
        else:
            discretizer = VectorDiscretizer(n_clusters=cfg.codebook_k, random_state=cfg.seed)
        discretizer.fit(transform(train_rows))

        def block_labels(feats: np.ndarray) -> list[np.ndarray]:
            n, b, d = feats.shape
            labels = discretizer.transform(transform(feats.reshape(-1, d)))
            labels = labels.reshape(n, b, labels.shape[1])
            return [labels[:, t, :] for t in range(b)]

    with pipeline_stage("train"):
        y_train = np.array([s.class_id for s in train])
        ensemble = BlockBayesEnsemble(
            structure=structure,
            cardinalities=list(discretizer.cardinalities_),
            noise_floor="auto",
            random_state=cfg.seed,
        )
        ensemble.fit(block_labels(train_feats), y_train)

    with pipeline_stage("evaluate"):
        truth = np.array([s.class_id for s in test])
        scores = ensemble.predict_proba(block_labels(test_feats))
        report = compute_report(truth, scores, ensemble.classes_)

    return StaticPipelineResult(
        config=cfg,
        ensemble=ensemble,
        discretizer=discretizer,
        standardizer=standardizer,
        pca=pca,
        report=report,
        test_truth=truth,
        test_scores=scores,
    )


def observation_pairs(view_sequences, quantizer_h, quantizer_v) -> list:
    """Symbol-stream pairs for a list of (horizontal, vertical) sequences."""
    return [
        make_observation_pair(quantizer_h.predict(h), quantizer_v.predict(v))
        for h, v in view_sequences
    ]


def run_dbn_pipeline(samples, cfg: PipelineConfig) -> DbnPipelineResult:
    """Train and evaluate the coupled-chain family on split samples."""
    indices = cfg.zernike_index_pairs

    with pipeline_stage("dataset"):
        views = _checked_views(samples)
        train, validation, test = views["train"], views["validation"], views["test"]
        if cfg.q_range is not None and not validation:
            raise ValueError("state selection needs a validation split")

    with pipeline_stage("features"):
        seqs = {
            name: [window_feature_sequences(s.image, cfg.window, indices) for s in view]
            for name, view in (("train", train), ("validation", validation), ("test", test))
        }

    with pipeline_stage("codebook"):
        quantizer_h = KMeansQuantizer(n_clusters=cfg.codebook_k, random_state=cfg.seed)
        quantizer_h.fit(np.vstack([h for h, _ in seqs["train"]]))
        quantizer_v = KMeansQuantizer(n_clusters=cfg.codebook_k, random_state=cfg.seed + 1)
        quantizer_v.fit(np.vstack([v for _, v in seqs["train"]]))
        m1, m2 = quantizer_h.codebook_.k, quantizer_v.codebook_.k

    with pipeline_stage("observations"):
        train_pairs = observation_pairs(seqs["train"], quantizer_h, quantizer_v)
        test_pairs = observation_pairs(seqs["test"], quantizer_h, quantizer_v)
        y_train = np.array([s.class_id for s in train])

    with pipeline_stage("train"):
        selection = None
        if cfg.q_range is not None:
            train_by_class: dict[int, list] = {}
            for pair, c in zip(train_pairs, y_train):
                train_by_class.setdefault(int(c), []).append(pair)
            val_pairs = observation_pairs(seqs["validation"], quantizer_h, quantizer_v)
            val_by_class: dict[int, list] = {}
            for pair, s in zip(val_pairs, validation):
                val_by_class.setdefault(s.class_id, []).append(pair)
            selection = select_states(
                train_by_class,
                val_by_class,
                cfg.q_range,
                seed=cfg.seed,
                m1=m1,
                m2=m2,
                max_iters=cfg.em_max_iters,
                tol=cfg.em_tol,
                restarts=cfg.em_restarts,
            )
            classes = sorted(train_by_class)
            bank = ClassModelBank(
                classes=classes,
                models=[selection.models[c, selection.q_per_class[c]] for c in classes],
                q_per_class=[selection.q_per_class[c] for c in classes],
            )
        else:
            classifier = CoupledHmmClassifier(
                n_states=cfg.n_states,
                max_iters=cfg.em_max_iters,
                tol=cfg.em_tol,
                restarts=cfg.em_restarts,
                m1=m1,
                m2=m2,
                random_state=cfg.seed,
            )
            classifier.fit(train_pairs, y_train)
            bank = classifier.bank()

    with pipeline_stage("evaluate"):
        truth = np.array([s.class_id for s in test])
        scores = np.empty((len(test_pairs), len(bank.classes)))
        for k, model in enumerate(bank.models):
            scores[:, k] = score_batch(model, test_pairs)
        report = compute_report(truth, scores, bank.classes)

    return DbnPipelineResult(
        config=cfg,
        bank=bank,
        quantizer_h=quantizer_h,
        quantizer_v=quantizer_v,
        report=report,
        test_truth=truth,
        test_scores=scores,
        selection=selection,
    )


def static_score_samples(
    samples, cfg: PipelineConfig, ensemble, discretizer, standardizer=None, pca=None
) -> np.ndarray:
    """Class-posterior matrix for samples under saved static artifacts."""
    indices = cfg.zernike_index_pairs
    transform = _RowTransform(standardizer, pca)
    feats = np.stack([block_feature_matrix(s.image, cfg.blocks, indices) for s in samples])
    n, b, d = feats.shape
    labels = discretizer.transform(transform(feats.reshape(-1, d)))
    labels = labels.reshape(n, b, labels.shape[1])
    return ensemble.predict_proba([labels[:, t, :] for t in range(b)])


def dbn_score_samples(
    samples, cfg: PipelineConfig, bank: ClassModelBank, quantizer_h, quantizer_v
) -> np.ndarray:
    """Per-class log-likelihood matrix for samples under a saved bank."""
    indices = cfg.zernike_index_pairs
    seqs = [window_feature_sequences(s.image, cfg.window, indices) for s in samples]
    pairs = observation_pairs(seqs, quantizer_h, quantizer_v)
    scores = np.empty((len(pairs), len(bank.classes)))
    for k, model in enumerate(bank.models):
        scores[:, k] = score_batch(model, pairs)
    return scores


def format_feature_dump(sample_ids, feature_blocks) -> str:
    """Feature records: sample id, block index, then the 12 components.

    One line per block, comma separated, floats at 9 significant
    digits, so identical inputs always produce identical bytes.
    """
    lines = []
    for sample_id, blocks in zip(sample_ids, feature_blocks):
        for t, row in enumerate(np.asarray(blocks)):
            values = ",".join(f"{float(v):.9g}" for v in row)
            lines.append(f"{sample_id},{t},{values}")
    return "\n".join(lines) + "\n"


def format_rate_curves(selection: StateSelection) -> str:
    """Rate-vs-states curves as columnar text for external plotting."""
    lines = ["# class n_states rate_percent"]
    for c in sorted(selection.rates):
        for q in sorted(selection.rates[c]):
            lines.append(f"{c} {q} {100.0 * selection.rates[c][q]:.4f}")
    return "\n".join(lines) + "\n"
