"""Offline handwritten-word recognition with Bayesian-network classifiers.

Two classifier families over moment descriptors of binarized word
images: per-block discrete Bayes classifiers with optional tree or
forest attribute structure, fused by posterior averaging, and
per-class coupled hidden Markov chains over quantized sliding-window
observation streams, compared by log-likelihood.
"""

from .bayesnet import (
    BlockBayesEnsemble,
    DiscreteBayesClassifier,
    block_posterior,
    build_fan,
    build_nb,
    build_tan,
    conditional_mutual_information,
    decide,
    image_posterior,
    laplace_cpt,
    mutual_information,
)
from .config import PipelineConfig, apply_overrides, format_config, load_config, parse_config_text
from .coupled_hmm import (
    ClassModelBank,
    CoupledHmm,
    CoupledHmmClassifier,
    InferenceResult,
    StateSelection,
    classify,
    em_step,
    joint_inference,
    make_observation_pair,
    score_batch,
    select_states,
    train_class_model,
)
from .dataset import (
    SplitConfig,
    assign_splits,
    load_dataset,
    load_image,
    read_manifest,
    save_dataset,
    save_image,
    split_dataset,
    split_views,
    write_manifest,
)
from .evaluation import (
    EvaluationReport,
    compute_report,
    format_report_human,
    format_report_machine,
    parse_report_machine,
)
from .imaging import BACKGROUND, INK, binarize, join_blocks, otsu_threshold, sliding_windows, split_blocks
from .moments import (
    DEFAULT_ZERNIKE_INDICES,
    CentralMoments,
    EmptyInkError,
    central_moments,
    feature_vector,
    hu_invariants,
    zernike_moments,
    zernike_radial,
)
from .persist import ChecksumError, VersionError, load_bank, load_model, save_bank, save_model
from .pipeline import (
    DbnPipelineResult,
    StageError,
    StaticPipelineResult,
    run_dbn_pipeline,
    run_static_pipeline,
)
from .quantize import (
    AttributeDiscretizer,
    Codebook,
    CorrelationPca,
    KMeansQuantizer,
    Standardizer,
    VectorDiscretizer,
    kmeans,
    load_codebook,
    save_codebook,
    select_k,
    silhouette_values,
)
from .synthesis import LabeledSample, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "AttributeDiscretizer",
    "BACKGROUND",
    "BlockBayesEnsemble",
    "CentralMoments",
    "ChecksumError",
    "ClassModelBank",
    "Codebook",
    "CorrelationPca",
    "CoupledHmm",
    "CoupledHmmClassifier",
    "DbnPipelineResult",
    "DEFAULT_ZERNIKE_INDICES",
    "DiscreteBayesClassifier",
    "EmptyInkError",
    "EvaluationReport",
    "INK",
    "InferenceResult",
    "KMeansQuantizer",
    "LabeledSample",
    "PipelineConfig",
    "SplitConfig",
    "StageError",
    "StateSelection",
    "StaticPipelineResult",
    "Standardizer",
    "VectorDiscretizer",
    "VersionError",
    "apply_overrides",
    "assign_splits",
    "binarize",
    "block_posterior",
    "build_fan",
    "build_nb",
    "build_tan",
    "central_moments",
    "classify",
    "compute_report",
    "conditional_mutual_information",
    "decide",
    "em_step",
    "feature_vector",
    "format_config",
    "format_report_human",
    "format_report_machine",
    "generate_synthetic",
    "hu_invariants",
    "image_posterior",
    "join_blocks",
    "joint_inference",
    "kmeans",
    "laplace_cpt",
    "load_bank",
    "load_codebook",
    "load_config",
    "load_dataset",
    "load_image",
    "load_model",
    "make_observation_pair",
    "mutual_information",
    "otsu_threshold",
    "parse_config_text",
    "parse_report_machine",
    "read_manifest",
    "run_dbn_pipeline",
    "run_static_pipeline",
    "save_bank",
    "save_codebook",
    "save_dataset",
    "save_image",
    "save_model",
    "score_batch",
    "select_k",
    "select_states",
    "silhouette_values",
    "sliding_windows",
    "split_blocks",
    "split_dataset",
    "split_views",
    "train_class_model",
    "write_manifest",
    "zernike_moments",
    "zernike_radial",
]
