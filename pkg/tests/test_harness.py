"""Tests for dataset plumbing, reporting, persistence, configuration,
the end-to-end pipelines and the command-line interface."""

import os

import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings
from hypothesis import strategies as st

from wordbn.cli import main
from wordbn.config import PipelineConfig, apply_overrides, format_config, load_config, parse_config_text
from wordbn.coupled_hmm import CoupledHmm
from wordbn.dataset import (
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
from wordbn.evaluation import (
    compute_report,
    format_report_human,
    format_report_machine,
    parse_report_machine,
)
from wordbn.persist import ChecksumError, VersionError, load_bank, load_model, save_bank, save_model
from wordbn.pipeline import (
    StageError,
    format_feature_dump,
    format_rate_curves,
    run_dbn_pipeline,
    run_static_pipeline,
)
from wordbn.quantize import AttributeDiscretizer, KMeansQuantizer, Standardizer, CorrelationPca
from wordbn.bayesnet import BlockBayesEnsemble, DiscreteBayesClassifier
from wordbn.synthesis import generate_synthetic


def tiny_config(**overrides) -> PipelineConfig:
    base = dict(
        classes=4,
        per_class=12,
        separability=0.95,
        codebook_k=6,
        window=24,
        n_states=2,
        em_max_iters=10,
        em_restarts=1,
    )
    base.update(overrides)
    return PipelineConfig(**base)


def tiny_samples(cfg: PipelineConfig, seed: int = 5):
    samples = generate_synthetic(
        classes=cfg.classes,
        per_class=cfg.per_class,
        separability=cfg.separability,
        seed=seed,
        height=cfg.image_height,
        width=cfg.image_width,
        blocks=cfg.blocks,
    )
    return split_dataset(samples, SplitConfig(seed=seed))


class TestSplitAssignment:
    def test_two_hundred_samples_split_100_50_50(self):
        """A 200-sample class yields exactly 100 train, 50 validation, 50 test."""
        names = assign_splits([7] * 200, SplitConfig(seed=0))
        assert names.count("train") == 100
        assert names.count("validation") == 50
        assert names.count("test") == 50

    def test_assignment_is_exhaustive_and_stratified(self):
        """Every sample lands in exactly one split, per class."""
        class_ids = [1] * 20 + [2] * 11 + [3] * 4
        names = assign_splits(class_ids, SplitConfig(seed=3))
        assert len(names) == len(class_ids)
        assert set(names) <= {"train", "validation", "test"}
        two = [n for c, n in zip(class_ids, names) if c == 2]
        assert two.count("validation") == 2 and two.count("test") == 2
        assert two.count("train") == 7
        three = [n for c, n in zip(class_ids, names) if c == 3]
        assert three.count("train") == 2
        assert three.count("validation") == 1 and three.count("test") == 1

    def test_same_seed_reproduces_assignment(self):
        """The split is a pure function of the class ids and the seed."""
        ids = [1, 2, 1, 2, 1, 2, 1, 2, 1, 2] * 3
        a = assign_splits(ids, SplitConfig(seed=11))
        b = assign_splits(ids, SplitConfig(seed=11))
        assert a == b

    def test_small_class_is_rejected(self):
        """Classes below four samples cannot populate every split."""
        with pytest.raises(ValueError, match="class 9 has only 3"):
            assign_splits([9, 9, 9] + [1] * 10, SplitConfig())

    def test_bad_fractions_are_rejected(self):
        """Fractions must be non-negative and sum to one."""
        with pytest.raises(ValueError, match="sum to 1"):
            SplitConfig(fractions=(0.5, 0.2, 0.2))
        with pytest.raises(ValueError, match="non-negative"):
            SplitConfig(fractions=(1.5, -0.25, -0.25))

    def test_split_dataset_assigns_in_place_order(self):
        """split_dataset preserves sample order and only fills the split."""
        cfg = tiny_config()
        raw = generate_synthetic(4, 8, 0.9, seed=2)
        labeled = split_dataset(raw, SplitConfig(seed=1))
        assert [s.class_id for s in labeled] == [s.class_id for s in raw]
        assert all(s.split in ("train", "validation", "test") for s in labeled)
        views = split_views(labeled)
        assert sum(len(v) for v in views.values()) == len(raw)


class TestManifestAndImages:
    def test_manifest_round_trip(self, tmp_path):
        """Records survive a write/read cycle, including unassigned splits."""
        path = tmp_path / "m.tsv"
        records = [("a.png", 1, "train"), ("b/c.pgm", 2, None), ("d.png", 3, "test")]
        write_manifest(records, path)
        assert read_manifest(path) == records

    def test_malformed_lines_are_rejected(self, tmp_path):
        """Field-count and split-name errors carry the line number."""
        path = tmp_path / "m.tsv"
        path.write_text("a.png\t1\n")
        with pytest.raises(ValueError, match="expected 3"):
            read_manifest(path)
        path.write_text("a.png\t1\tdev\n")
        with pytest.raises(ValueError, match="unknown split"):
            read_manifest(path)

    def test_tab_in_path_is_rejected(self, tmp_path):
        """Tabs would corrupt the record structure, so they are refused."""
        with pytest.raises(ValueError, match="contains a tab"):
            write_manifest([("a\tb.png", 1, None)], tmp_path / "m.tsv")

    @pytest.mark.parametrize("ext", ["png", "pgm"])
    def test_image_round_trip_is_exact(self, tmp_path, ext):
        """PNG and PGM writing preserves every 8-bit pixel."""
        rng = np.random.default_rng(4)
        img = rng.integers(0, 256, size=(17, 23), dtype=np.uint8)
        path = tmp_path / f"img.{ext}"
        save_image(img, path)
        assert np.array_equal(load_image(path), img)

    def test_dataset_round_trip(self, tmp_path):
        """save_dataset writes images plus manifest that load_dataset restores."""
        samples = split_dataset(generate_synthetic(3, 4, 0.9, seed=8), SplitConfig(seed=0))
        manifest = save_dataset(samples, tmp_path / "ds")
        loaded = load_dataset(manifest)
        assert [s.class_id for s in loaded] == [s.class_id for s in samples]
        assert [s.split for s in loaded] == [s.split for s in samples]
        for a, b in zip(loaded, samples):
            assert np.array_equal(a.image, b.image)


class TestComputeReport:
    def test_perfect_predictor_scores_100(self):
        """A perfect ranking yields an identity confusion matrix and t_m 100."""
        truth = [1, 2, 3, 1, 2, 3]
        scores = np.eye(3)[[0, 1, 2, 0, 1, 2]]
        report = compute_report(truth, scores, [1, 2, 3])
        assert report.t_m == 100.0
        assert np.allclose(report.confusion, 100.0 * np.eye(3))
        assert all(row == (100.0,) * 4 for row in report.per_class_topn)

    def test_tied_scores_rank_lower_class_first(self):
        """Equal scores resolve in class order, so the lower id wins rank one."""
        report = compute_report([2, 1], [[0.5, 0.5], [0.9, 0.1]], [1, 2])
        row = report.per_class_topn[report.classes.index(2)]
        assert row[0] == 0.0 and row[1] == 100.0
        assert report.confusion[1][0] == 100.0

    def test_t_m_averages_per_class_top1(self):
        """t_m weighs classes equally even with unbalanced counts."""
        truth = [1, 1, 1, 1, 2]
        scores = [[0.9, 0.1], [0.9, 0.1], [0.9, 0.1], [0.1, 0.9], [0.2, 0.8]]
        report = compute_report(truth, scores, [1, 2])
        assert report.per_class_topn[0][0] == 75.0
        assert report.per_class_topn[1][0] == 100.0
        assert report.t_m == 87.5

    def test_confusion_rows_sum_to_100(self):
        """Each confusion row is a percent distribution over predictions."""
        rng = np.random.default_rng(0)
        truth = rng.integers(1, 5, size=60)
        scores = rng.random((60, 4))
        report = compute_report(truth, scores, [1, 2, 3, 4])
        sums = np.asarray(report.confusion).sum(axis=1)
        assert np.allclose(sums, 100.0, atol=1e-9)

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_topn_rates_are_monotone(self, seed):
        """Top-N rates never decrease as N grows."""
        rng = np.random.default_rng(seed)
        n_classes = int(rng.integers(2, 7))
        truth = rng.integers(1, n_classes + 1, size=40)
        truth[:n_classes] = np.arange(1, n_classes + 1)
        scores = rng.random((40, n_classes))
        report = compute_report(truth, scores, list(range(1, n_classes + 1)))
        for row in report.per_class_topn:
            assert all(a <= b + 1e-12 for a, b in zip(row, row[1:]))

    def test_validation_errors(self):
        """Shape mismatches and unknown labels are rejected."""
        with pytest.raises(ValueError, match="one score vector per true label"):
            compute_report([1, 2], [[0.5, 0.5]], [1, 2])
        with pytest.raises(ValueError, match="entries for"):
            compute_report([1], [[0.5, 0.5, 0.0]], [1, 2])
        with pytest.raises(ValueError, match="not among the classes"):
            compute_report([3], [[0.5, 0.5]], [1, 2])
        with pytest.raises(ValueError, match="no evaluation samples"):
            compute_report([1, 1], [[0.5, 0.5], [0.5, 0.5]], [1, 2])

    def test_machine_report_round_trip_is_exact(self):
        """Parsing a formatted machine report reproduces it bit for bit."""
        rng = np.random.default_rng(7)
        truth = np.r_[rng.integers(1, 4, size=30), [1, 2, 3]]
        scores = rng.random((33, 3))
        report = compute_report(truth, scores, [1, 2, 3])
        assert parse_report_machine(format_report_machine(report)) == report

    def test_human_report_is_deterministic(self):
        """Formatting has no timestamps or other run-dependent content."""
        report = compute_report([1, 2], np.eye(2), [1, 2])
        text = format_report_human(report)
        assert text == format_report_human(report)
        assert "mean per-class top-1: 100.00" in text


class TestConfig:
    def test_defaults_match_published_protocol(self):
        """The default config encodes the documented experiment setup."""
        cfg = PipelineConfig()
        assert cfg.split_fractions == (0.50, 0.25, 0.25)
        assert cfg.blocks == 3
        assert cfg.codebook_k == 22
        assert cfg.classifier == "fan"
        assert cfg.q_range is None
        assert cfg.zernike_index_pairs == ((1, 1), (2, 0), (2, 2), (3, 1), (3, 3))

    def test_parse_overrides_and_comments(self):
        """File values override defaults; comments and blanks are skipped."""
        cfg = parse_config_text("# comment\n\nseed = 9\nem_tol = 1e-3\nclassifier = nb\n")
        assert cfg.seed == 9 and cfg.em_tol == 1e-3 and cfg.classifier == "nb"

    def test_unknown_key_is_rejected(self):
        """Misspelled keys fail instead of being silently dropped."""
        with pytest.raises(ValueError, match="unknown configuration key 'sede'"):
            parse_config_text("sede = 1\n")

    def test_invalid_values_are_rejected(self):
        """Domain validation runs on every construction."""
        with pytest.raises(ValueError, match="unknown classifier"):
            parse_config_text("classifier = svm\n")
        with pytest.raises(ValueError, match="set together"):
            PipelineConfig(q_min=2)
        with pytest.raises(ValueError, match="empty state range"):
            PipelineConfig(q_min=5, q_max=3)
        with pytest.raises(ValueError, match="bad moment index"):
            PipelineConfig(zernike_indices="11;20")

    def test_q_range_property(self):
        """q_min..q_max map to an inclusive range object."""
        assert list(PipelineConfig(q_min=2, q_max=4).q_range) == [2, 3, 4]

    def test_format_and_reload_round_trip(self, tmp_path):
        """format_config emits a file that reloads to an equal config."""
        cfg = PipelineConfig(seed=3, em_tol=1e-5, classifier="tan", q_min=2, q_max=3)
        path = tmp_path / "c.txt"
        path.write_text(format_config(cfg))
        assert load_config(path) == cfg

    def test_apply_overrides_skips_none(self):
        """None-valued overrides leave the config untouched."""
        cfg = apply_overrides(PipelineConfig(), seed=None, blocks=5)
        assert cfg.seed == 0 and cfg.blocks == 5
        with pytest.raises(ValueError, match="unknown configuration key"):
            apply_overrides(PipelineConfig(), blks=1)


def small_labels(rng, n=60, m=4, card=5):
    X = rng.integers(0, card, size=(n, m))
    y = rng.integers(1, 4, size=n)
    y[:3] = [1, 2, 3]
    return X, y


class TestPersistence:
    def test_static_classifier_round_trip_is_bit_exact(self, tmp_path):
        """A reloaded classifier reproduces log-posteriors bit for bit."""
        rng = np.random.default_rng(0)
        X, y = small_labels(rng)
        model = DiscreteBayesClassifier(structure="forest", cardinalities=[5] * 4).fit(X, y)
        path = tmp_path / "m.model"
        save_model(model, path)
        loaded = load_model(path, "static-classifier")
        probe = rng.integers(0, 5, size=(20, 4))
        assert np.array_equal(loaded.predict_log_proba(probe), model.predict_log_proba(probe))
        assert loaded.edges_ == model.edges_

    def test_ensemble_round_trip_is_bit_exact(self, tmp_path):
        """Block ensembles restore every per-block model exactly."""
        rng = np.random.default_rng(1)
        blocks = [rng.integers(0, 4, size=(50, 3)) for _ in range(3)]
        y = rng.integers(1, 4, size=50)
        y[:3] = [1, 2, 3]
        model = BlockBayesEnsemble(structure="tree", cardinalities=[4, 4, 4], random_state=0)
        model.fit(blocks, y)
        path = tmp_path / "e.model"
        save_model(model, path)
        loaded = load_model(path, "block-ensemble")
        probe = [rng.integers(0, 4, size=(10, 3)) for _ in range(3)]
        assert np.array_equal(loaded.predict_proba(probe), model.predict_proba(probe))

    def test_chmm_round_trip_is_bit_exact(self, tmp_path):
        """Coupled-chain models reload without renormalization drift."""
        model = CoupledHmm.random_model(3, 2, 4, 5, random_state=3)
        path = tmp_path / "c.chmm"
        save_model(model, path)
        loaded = load_model(path, "chmm")
        for l in range(2):
            assert np.array_equal(loaded.pi[l], model.pi[l])
            assert np.array_equal(loaded.A[l], model.A[l])
            assert np.array_equal(loaded.B[l], model.B[l])
        y1 = np.array([0, 1, 2, 3, 0])
        y2 = np.array([4, 0, 1, 2, 3])
        assert loaded.score(y1, y2) == model.score(y1, y2)

    def test_quantizer_and_discretizer_round_trips(self, tmp_path):
        """Vector quantizers and discretizers restore identical labels."""
        rng = np.random.default_rng(2)
        points = rng.random((40, 3))
        quant = KMeansQuantizer(n_clusters=4, random_state=0).fit(points)
        save_model(quant, tmp_path / "q.model")
        loaded = load_model(tmp_path / "q.model", "kmeans-quantizer")
        probe = rng.random((15, 3))
        assert np.array_equal(loaded.predict(probe), quant.predict(probe))

        disc = AttributeDiscretizer(n_clusters=3, random_state=1).fit(points)
        save_model(disc, tmp_path / "d.model")
        loaded_disc = load_model(tmp_path / "d.model", "attribute-discretizer")
        assert np.array_equal(loaded_disc.transform(probe), disc.transform(probe))
        assert loaded_disc.cardinalities_ == disc.cardinalities_

    def test_standardizer_and_pca_round_trips(self, tmp_path):
        """Preprocessing transforms reload to identical outputs."""
        rng = np.random.default_rng(3)
        X = rng.random((30, 5))
        std = Standardizer().fit(X)
        save_model(std, tmp_path / "s.model")
        assert np.array_equal(load_model(tmp_path / "s.model").transform(X), std.transform(X))
        pca = CorrelationPca(3).fit(std.transform(X))
        save_model(pca, tmp_path / "p.model")
        loaded = load_model(tmp_path / "p.model", "correlation-pca")
        assert np.array_equal(loaded.transform(std.transform(X)), pca.transform(std.transform(X)))

    def test_truncated_file_raises_checksum_error(self, tmp_path):
        """A partial document never loads as a partial model."""
        model = CoupledHmm.random_model(2, 2, 3, 3, random_state=0)
        path = tmp_path / "c.chmm"
        save_model(model, path)
        text = path.read_text()
        path.write_text(text[: len(text) - 40])
        with pytest.raises(ChecksumError, match="checksum mismatch"):
            load_model(path)

    def test_unsupported_version_is_explicit(self, tmp_path):
        """Version drift raises a version error, not a parse error."""
        model = CoupledHmm.random_model(2, 2, 3, 3, random_state=0)
        path = tmp_path / "c.chmm"
        save_model(model, path)
        text = path.read_text().replace("wordbn/model 1", "wordbn/model 2", 1)
        path.write_text(text)
        with pytest.raises(VersionError, match="unsupported format"):
            load_model(path)
        path.write_text("garbage\n")
        with pytest.raises(VersionError, match="not a recognizable"):
            load_model(path)

    def test_kind_mismatch_is_rejected(self, tmp_path):
        """Asking for the wrong kind fails before deserialization."""
        model = CoupledHmm.random_model(2, 2, 3, 3, random_state=0)
        path = tmp_path / "c.chmm"
        save_model(model, path)
        with pytest.raises(ValueError, match="expected kind"):
            load_model(path, "block-ensemble")

    def test_bank_round_trip(self, tmp_path):
        """Banks persist as one document per class plus an index."""
        from wordbn.coupled_hmm import ClassModelBank

        models = [CoupledHmm.random_model(2, 2, 3, 3, random_state=s) for s in (0, 1)]
        bank = ClassModelBank(classes=[3, 7], models=models, q_per_class=[2, 2])
        index = save_bank(bank, tmp_path / "bank")
        assert os.path.exists(tmp_path / "bank" / "class_003.chmm")
        loaded = load_bank(index)
        assert loaded.classes == [3, 7] and loaded.q_per_class == [2, 2]
        y1 = np.array([0, 1, 2])
        y2 = np.array([2, 1, 0])
        for a, b in zip(loaded.models, models):
            assert a.score(y1, y2) == b.score(y1, y2)


class TestStaticPipeline:
    def test_separable_synthetic_data_is_recognized(self):
        """A small well-separated dataset reaches a high Top-1 rate."""
        cfg = tiny_config()
        result = run_static_pipeline(tiny_samples(cfg), cfg)
        assert result.report.t_m >= 90.0
        assert result.report.classes == (1, 2, 3, 4)
        assert result.test_scores.shape == (len(result.test_truth), 4)

    def test_rerun_is_deterministic(self):
        """The same samples and config reproduce the identical report."""
        cfg = tiny_config()
        a = run_static_pipeline(tiny_samples(cfg), cfg)
        b = run_static_pipeline(tiny_samples(cfg), cfg)
        assert a.report == b.report
        assert np.array_equal(a.test_scores, b.test_scores)

    def test_classifier_flag_selects_structure(self):
        """nb, tan and fan map to no edges, a tree and a pruned forest."""
        cfg = tiny_config()
        samples = tiny_samples(cfg)
        nb = run_static_pipeline(samples, replace(cfg, classifier="nb"))
        tan = run_static_pipeline(samples, replace(cfg, classifier="tan"))
        m = len(nb.ensemble.block_models_[0].cardinalities_)
        assert all(not blk.edges_ for blk in nb.ensemble.block_models_)
        assert all(len(blk.edges_) == m - 1 for blk in tan.ensemble.block_models_)

    def test_dbn_flag_is_rejected(self):
        """The static runner refuses the dynamic family's flag."""
        cfg = tiny_config()
        with pytest.raises(StageError, match=r"\[config\]"):
            run_static_pipeline(tiny_samples(cfg), replace(cfg, classifier="dbn"))

    def test_test_labels_never_influence_training(self, tmp_path):
        """Corrupting test labels leaves every trained artifact identical."""
        cfg = tiny_config()
        samples = tiny_samples(cfg)
        corrupted = [
            replace(s, class_id=(s.class_id % cfg.classes) + 1) if s.split == "test" else s
            for s in samples
        ]
        a = run_static_pipeline(samples, cfg)
        b = run_static_pipeline(corrupted, cfg)
        save_model(a.ensemble, tmp_path / "a.model")
        save_model(b.ensemble, tmp_path / "b.model")
        assert (tmp_path / "a.model").read_bytes() == (tmp_path / "b.model").read_bytes()
        save_model(a.discretizer, tmp_path / "ad.model")
        save_model(b.discretizer, tmp_path / "bd.model")
        assert (tmp_path / "ad.model").read_bytes() == (tmp_path / "bd.model").read_bytes()

    def test_pca_switch_runs(self):
        """Enabling the projection inserts standardize + project stages."""
        cfg = tiny_config(pca_components=6)
        result = run_static_pipeline(tiny_samples(cfg), cfg)
        assert result.standardizer is not None and result.pca is not None
        assert result.pca.components_.shape == (6, 12)

    def test_per_vector_discretization_runs(self):
        """The per-vector switch yields one attribute per block."""
        cfg = tiny_config(discretization="per-vector")
        result = run_static_pipeline(tiny_samples(cfg), cfg)
        assert result.discretizer.cardinalities_ == [6]
        assert result.report.t_m > 0.0


class TestDbnPipeline:
    def test_separable_synthetic_data_is_recognized(self):
        """Coupled-chain classification runs end to end on tiny data."""
        cfg = tiny_config(per_class=16, n_states=2)
        result = run_dbn_pipeline(tiny_samples(cfg), cfg)
        assert result.report.classes == (1, 2, 3, 4)
        assert np.isfinite(result.test_scores).all()
        assert len(result.bank.classes) == 4

    def test_rerun_is_deterministic(self):
        """The same samples and config reproduce the identical report."""
        cfg = tiny_config(per_class=12, n_states=2)
        a = run_dbn_pipeline(tiny_samples(cfg), cfg)
        b = run_dbn_pipeline(tiny_samples(cfg), cfg)
        assert a.report == b.report
        assert np.array_equal(a.test_scores, b.test_scores)

    def test_test_labels_never_influence_training(self, tmp_path):
        """Corrupting test labels leaves codebooks and bank identical."""
        cfg = tiny_config(per_class=12, n_states=2)
        samples = tiny_samples(cfg)
        corrupted = [
            replace(s, class_id=(s.class_id % cfg.classes) + 1) if s.split == "test" else s
            for s in samples
        ]
        a = run_dbn_pipeline(samples, cfg)
        b = run_dbn_pipeline(corrupted, cfg)
        save_bank(a.bank, tmp_path / "a")
        save_bank(b.bank, tmp_path / "b")
        for name in sorted(os.listdir(tmp_path / "a")):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        save_model(a.quantizer_h, tmp_path / "qa.model")
        save_model(b.quantizer_h, tmp_path / "qb.model")
        assert (tmp_path / "qa.model").read_bytes() == (tmp_path / "qb.model").read_bytes()

    def test_state_range_drives_selection(self):
        """A q-range trains per candidate and picks one Q per class."""
        cfg = tiny_config(per_class=12, q_min=2, q_max=3, em_max_iters=8)
        result = run_dbn_pipeline(tiny_samples(cfg), cfg)
        assert result.selection is not None
        assert set(result.selection.q_per_class) == {1, 2, 3, 4}
        assert all(q in (2, 3) for q in result.selection.q_per_class.values())
        assert result.bank.q_per_class == [
            result.selection.q_per_class[c] for c in result.bank.classes
        ]
        curves = format_rate_curves(result.selection)
        lines = curves.strip().splitlines()
        assert lines[0].startswith("#")
        assert len(lines) == 1 + 4 * 2

    def test_selection_requires_validation_split(self):
        """A q-range without validation samples is a dataset error."""
        cfg = tiny_config(per_class=12, q_min=2, q_max=3)
        samples = [
            s for s in tiny_samples(cfg) if s.split != "validation"
        ]
        with pytest.raises(StageError, match="validation split"):
            run_dbn_pipeline(samples, cfg)


class TestFeatureDump:
    def test_nine_significant_digit_records(self):
        """Records are id, block index, then 12 reals at 9 digits."""
        ids = ["a.png"]
        feats = [np.array([[0.123456789123, 1e-7] + [0.0] * 10])]
        text = format_feature_dump(ids, feats)
        fields = text.strip().split(",")
        assert fields[0] == "a.png" and fields[1] == "0"
        assert fields[2] == "0.123456789"
        assert fields[3] == "1e-07"
        assert len(fields) == 14

    def test_dump_is_deterministic(self):
        """The same features always format to the same bytes."""
        rng = np.random.default_rng(0)
        feats = [rng.random((3, 12))]
        assert format_feature_dump(["s"], feats) == format_feature_dump(["s"], feats)


class TestCli:
    def run(self, *argv):
        return main(list(argv))

    def test_full_verb_chain(self, tmp_path):
        """synth, split, features, codebook, train, evaluate, predict, report."""
        cfg_path = tmp_path / "run.cfg"
        cfg_path.write_text(
            "classes = 4\nper_class = 12\ncodebook_k = 6\nwindow = 24\n"
            "n_states = 2\nem_max_iters = 8\nem_restarts = 1\n"
        )
        data = tmp_path / "data"
        manifest = str(data / "manifest.tsv")
        assert self.run("synth", "--config", str(cfg_path), "--seed", "5", "--out", str(data)) == 0
        assert self.run("split", "--config", str(cfg_path), "--seed", "5", "--manifest", manifest) == 0
        feats = tmp_path / "features.csv"
        assert self.run("features", "--config", str(cfg_path), "--manifest", manifest, "--out", str(feats)) == 0
        line = feats.read_text().splitlines()[0].split(",")
        assert len(line) == 14 and line[1] == "0"
        cb = tmp_path / "cb.txt"
        assert self.run("codebook", "--config", str(cfg_path), "--manifest", manifest, "--out", str(cb)) == 0
        assert cb.read_text().startswith("wordbn/codebook 1")

        static_dir = tmp_path / "static"
        assert self.run(
            "train-static", "--config", str(cfg_path), "--manifest", manifest,
            "--classifier", "fan", "--out", str(static_dir),
        ) == 0
        assert (static_dir / "ensemble.model").exists()
        assert (static_dir / "report.tsv").exists()

        dbn_dir = tmp_path / "dbn"
        assert self.run(
            "train-dbn", "--config", str(cfg_path), "--manifest", manifest, "--out", str(dbn_dir),
        ) == 0
        assert (dbn_dir / "bank" / "bank.tsv").exists()

        eval_dir = tmp_path / "eval"
        assert self.run("evaluate", "--manifest", manifest, "--model", str(static_dir), "--out", str(eval_dir)) == 0
        assert (eval_dir / "report.tsv").read_bytes() == (static_dir / "report.tsv").read_bytes()

        preds = tmp_path / "preds.tsv"
        assert self.run("predict", "--manifest", manifest, "--model", str(static_dir), "--out", str(preds)) == 0
        assert len(preds.read_text().splitlines()) == 4 * 12

        human = tmp_path / "human.txt"
        assert self.run("report", "--machine", str(dbn_dir / "report.tsv"), "--out", str(human)) == 0
        assert "mean per-class top-1" in human.read_text()

    def test_errors_are_stage_tagged_and_nonzero(self, tmp_path, capsys):
        """Failures exit nonzero and name the failing stage."""
        missing = str(tmp_path / "nope.tsv")
        assert self.run("features", "--manifest", missing, "--out", str(tmp_path / "f.csv")) == 1
        err = capsys.readouterr().err
        assert "[features]" in err

    def test_split_flag_overrides_config_file(self, tmp_path, capsys):
        """CLI flags beat config-file values."""
        cfg_path = tmp_path / "c.cfg"
        cfg_path.write_text("seed = 1\nclasses = 3\nper_class = 6\n")
        data = tmp_path / "d"
        assert self.run("synth", "--config", str(cfg_path), "--seed", "9", "--out", str(data)) == 0
        capsys.readouterr()
        records = read_manifest(data / "manifest.tsv")
        assert len(records) == 18
        other = tmp_path / "d2"
        assert self.run("synth", "--config", str(cfg_path), "--seed", "9", "--out", str(other)) == 0
        assert (data / "manifest.tsv").read_bytes() == (other / "manifest.tsv").read_bytes()
