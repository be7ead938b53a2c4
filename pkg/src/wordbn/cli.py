"""Command-line interface: batch verbs over manifests and model files.

Every verb reads and writes files and exits 0 on success; failures
print a stage-tagged diagnostic to stderr and exit nonzero. Flags
override config-file values, which override the built-in defaults.
"""

import argparse
import os
import sys

import numpy as np

from .config import PipelineConfig, apply_overrides, format_config, load_config
from .dataset import (
    SplitConfig,
    assign_splits,
    load_dataset,
    read_manifest,
    save_dataset,
    split_views,
    write_manifest,
)
from .evaluation import compute_report, format_report_human, format_report_machine, parse_report_machine
from .persist import load_bank, load_model, save_bank, save_model
from .pipeline import (
    StageError,
    block_feature_matrix,
    dbn_score_samples,
    format_feature_dump,
    format_rate_curves,
    pipeline_stage,
    run_dbn_pipeline,
    run_static_pipeline,
    static_score_samples,
    window_feature_sequences,
)
from .quantize import kmeans, save_codebook
from .synthesis import generate_synthetic

CONFIG_FILE = "config.txt"
ENSEMBLE_FILE = "ensemble.model"
DISCRETIZER_FILE = "discretizer.model"
STANDARDIZER_FILE = "standardizer.model"
PCA_FILE = "pca.model"
QUANTIZER_H_FILE = "codebook_h.model"
QUANTIZER_V_FILE = "codebook_v.model"
BANK_DIR = "bank"
HUMAN_REPORT_FILE = "report.txt"
MACHINE_REPORT_FILE = "report.tsv"
RATE_CURVES_FILE = "rate_curves.txt"


def _parse_q_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    if not sep:
        raise ValueError(f"expected a range like 2..6, got {text!r}")
    return int(lo), int(hi)


def resolve_config(args, base: PipelineConfig | None = None) -> PipelineConfig:
    """Defaults, then config file, then command-line flags."""
    cfg = base if base is not None else PipelineConfig()
    if getattr(args, "config", None):
        cfg = load_config(args.config, base=cfg)
    overrides = {
        "seed": getattr(args, "seed", None),
        "classifier": getattr(args, "classifier", None),
        "blocks": getattr(args, "blocks", None),
        "window": getattr(args, "window", None),
        "codebook_k": getattr(args, "codebook_k", None),
    }
    if getattr(args, "q_range", None):
        overrides["q_min"], overrides["q_max"] = _parse_q_range(args.q_range)
    return apply_overrides(cfg, **overrides)


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _require_out_dir(args) -> str:
    if not args.out:
        raise ValueError("--out DIR is required for this verb")
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _split_samples(manifest_path):
    samples = load_dataset(manifest_path)
    if any(s.split is None for s in samples):
        raise ValueError("manifest has unassigned splits; run the split verb first")
    return samples


def _write_reports(out_dir, report) -> None:
    _write_text(os.path.join(out_dir, HUMAN_REPORT_FILE), format_report_human(report))
    _write_text(os.path.join(out_dir, MACHINE_REPORT_FILE), format_report_machine(report))


def cmd_synth(args) -> int:
    with pipeline_stage("synth"):
        cfg = resolve_config(args)
        out = _require_out_dir(args)
        samples = generate_synthetic(
            classes=cfg.classes,
            per_class=cfg.per_class,
            separability=cfg.separability,
            seed=cfg.seed,
            height=cfg.image_height,
            width=cfg.image_width,
            blocks=cfg.blocks,
        )
        manifest = save_dataset(samples, out)
        print(manifest)
    return 0


def cmd_split(args) -> int:
    with pipeline_stage("split"):
        cfg = resolve_config(args)
        records = read_manifest(args.manifest)
        names = assign_splits(
            [class_id for _, class_id, _ in records],
            SplitConfig(fractions=cfg.split_fractions, seed=cfg.seed),
        )
        updated = [(rel, class_id, name) for (rel, class_id, _), name in zip(records, names)]
        target = args.out if args.out else args.manifest
        write_manifest(updated, target)
        print(target)
    return 0


def cmd_features(args) -> int:
    with pipeline_stage("features"):
        cfg = resolve_config(args)
        if not args.out:
            raise ValueError("--out FILE is required for this verb")
        records = read_manifest(args.manifest)
        samples = load_dataset(args.manifest)
        ids = [rel for rel, _, _ in records]
        feats = [
            block_feature_matrix(s.image, cfg.blocks, cfg.zernike_index_pairs) for s in samples
        ]
        _write_text(args.out, format_feature_dump(ids, feats))
        print(args.out)
    return 0


def cmd_codebook(args) -> int:
    with pipeline_stage("codebook"):
        cfg = resolve_config(args)
        if not args.out:
            raise ValueError("--out FILE is required for this verb")
        samples = _split_samples(args.manifest)
        train = split_views(samples)["train"]
        if not train:
            raise ValueError("training split is empty")
        rows = []
        for s in train:
            h, v = window_feature_sequences(s.image, cfg.window, cfg.zernike_index_pairs)
            rows.append(h if args.axis == "horizontal" else v)
        seed = cfg.seed if args.axis == "horizontal" else cfg.seed + 1
        _, codebook, _ = kmeans(np.vstack(rows), cfg.codebook_k, seed=seed)
        save_codebook(codebook, args.out)
        print(args.out)
    return 0


def cmd_train_static(args) -> int:
    with pipeline_stage("train-static"):
        cfg = resolve_config(args)
        out = _require_out_dir(args)
        samples = _split_samples(args.manifest)
        result = run_static_pipeline(samples, cfg)
        save_model(result.ensemble, os.path.join(out, ENSEMBLE_FILE))
        save_model(result.discretizer, os.path.join(out, DISCRETIZER_FILE))
        if result.standardizer is not None:
            save_model(result.standardizer, os.path.join(out, STANDARDIZER_FILE))
        if result.pca is not None:
            save_model(result.pca, os.path.join(out, PCA_FILE))
        _write_text(os.path.join(out, CONFIG_FILE), format_config(cfg))
        _write_reports(out, result.report)
        print(f"{out} t_m {result.report.t_m:.2f}")
    return 0


def cmd_train_dbn(args) -> int:
    with pipeline_stage("train-dbn"):
        cfg = resolve_config(args)
        out = _require_out_dir(args)
        samples = _split_samples(args.manifest)
        result = run_dbn_pipeline(samples, cfg)
        save_model(result.quantizer_h, os.path.join(out, QUANTIZER_H_FILE))
        save_model(result.quantizer_v, os.path.join(out, QUANTIZER_V_FILE))
        save_bank(result.bank, os.path.join(out, BANK_DIR))
        _write_text(os.path.join(out, CONFIG_FILE), format_config(cfg))
        _write_reports(out, result.report)
        if result.selection is not None:
            _write_text(os.path.join(out, RATE_CURVES_FILE), format_rate_curves(result.selection))
        print(f"{out} t_m {result.report.t_m:.2f}")
    return 0


def _model_family(model_dir: str) -> str:
    if os.path.exists(os.path.join(model_dir, ENSEMBLE_FILE)):
        return "static"
    if os.path.exists(os.path.join(model_dir, BANK_DIR, "bank.tsv")):
        return "dbn"
    raise ValueError(f"{model_dir} holds no recognizable model artifacts")


def _load_artifacts(args):
    model_dir = args.model
    base = load_config(os.path.join(model_dir, CONFIG_FILE))
    cfg = resolve_config(args, base=base)
    if _model_family(model_dir) == "static":
        ensemble = load_model(os.path.join(model_dir, ENSEMBLE_FILE), "block-ensemble")
        discretizer = load_model(os.path.join(model_dir, DISCRETIZER_FILE))
        standardizer = pca = None
        if os.path.exists(os.path.join(model_dir, STANDARDIZER_FILE)):
            standardizer = load_model(os.path.join(model_dir, STANDARDIZER_FILE), "standardizer")
        if os.path.exists(os.path.join(model_dir, PCA_FILE)):
            pca = load_model(os.path.join(model_dir, PCA_FILE), "correlation-pca")
        def score(samples):
            return static_score_samples(samples, cfg, ensemble, discretizer, standardizer, pca)
        classes = [int(c) for c in ensemble.classes_]
        return cfg, score, classes
    quantizer_h = load_model(os.path.join(model_dir, QUANTIZER_H_FILE), "kmeans-quantizer")
    quantizer_v = load_model(os.path.join(model_dir, QUANTIZER_V_FILE), "kmeans-quantizer")
    bank = load_bank(os.path.join(model_dir, BANK_DIR, "bank.tsv"))
    def score(samples):
        return dbn_score_samples(samples, cfg, bank, quantizer_h, quantizer_v)
    return cfg, score, list(bank.classes)


def cmd_evaluate(args) -> int:
    with pipeline_stage("evaluate"):
        cfg, score, classes = _load_artifacts(args)
        out = _require_out_dir(args)
        samples = _split_samples(args.manifest)
        test = split_views(samples)["test"]
        if not test:
            raise ValueError("test split is empty")
        scores = score(test)
        truth = np.array([s.class_id for s in test])
        report = compute_report(truth, scores, classes)
        _write_reports(out, report)
        print(f"{out} t_m {report.t_m:.2f}")
    return 0


def cmd_predict(args) -> int:
    with pipeline_stage("predict"):
        cfg, score, classes = _load_artifacts(args)
        if not args.out:
            raise ValueError("--out FILE is required for this verb")
        records = read_manifest(args.manifest)
        samples = load_dataset(args.manifest)
        scores = score(samples)
        winners = np.argmax(scores, axis=1)
        lines = [
            f"{rel}\t{classes[int(w)]}"
            for (rel, _, _), w in zip(records, winners)
        ]
        _write_text(args.out, "\n".join(lines) + "\n")
        print(args.out)
    return 0


def cmd_report(args) -> int:
    with pipeline_stage("report"):
        if not args.out:
            raise ValueError("--out FILE is required for this verb")
        with open(args.machine, encoding="utf-8") as fh:
            report = parse_report_machine(fh.read())
        _write_text(args.out, format_report_human(report))
        print(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--classifier", choices=("nb", "tan", "fan", "dbn"))
    common.add_argument("--blocks", type=int, help="vertical block count")
    common.add_argument("--window", type=int, help="sliding window size in pixels")
    common.add_argument("--codebook-k", type=int, dest="codebook_k", help="codebook size")
    common.add_argument("--q-range", dest="q_range", help="state-count range A..B")
    common.add_argument("--out", help="output directory or file")

    parser = argparse.ArgumentParser(prog="wordbn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("split", parents=[common], help="assign stratified splits in a manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(handler=cmd_split)

    p = sub.add_parser("features", parents=[common], help="dump per-block feature records")
    p.add_argument("--manifest", required=True)
    p.set_defaults(handler=cmd_features)

    p = sub.add_parser("codebook", parents=[common], help="build a window codebook from the training split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--axis", choices=("horizontal", "vertical"), default="horizontal")
    p.set_defaults(handler=cmd_codebook)

    p = sub.add_parser("train-static", parents=[common], help="train and evaluate a block-ensemble classifier")
    p.add_argument("--manifest", required=True)
    p.set_defaults(handler=cmd_train_static)

    p = sub.add_parser("train-dbn", parents=[common], help="train and evaluate coupled-chain class models")
    p.add_argument("--manifest", required=True)
    p.set_defaults(handler=cmd_train_dbn)

    p = sub.add_parser("evaluate", parents=[common], help="score a saved model on the test split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True, help="model directory from a train verb")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("predict", parents=[common], help="predict classes for every manifest sample")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True, help="model directory from a train verb")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("report", parents=[common], help="render a machine report as a human table")
    p.add_argument("--machine", required=True, help="machine-readable report file")
    p.set_defaults(handler=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: [{args.command}] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
