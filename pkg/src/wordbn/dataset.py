"""Dataset plumbing: image files, manifests and stratified splits.

A dataset on disk is a directory of 8-bit grayscale images plus a
manifest: one record per line, `<relative-path><TAB><class-id><TAB><split>`.
A `-` in the split column marks a sample not yet assigned.
"""

import os
from dataclasses import dataclass, replace

import numpy as np
from PIL import Image

from .synthesis import LabeledSample

SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class SplitConfig:
    """Stratified split fractions; remainders go to the training split."""

    fractions: tuple[float, float, float] = (0.50, 0.25, 0.25)
    seed: int = 0

    def __post_init__(self):
        if len(self.fractions) != 3 or any(f < 0 for f in self.fractions):
            raise ValueError("three non-negative fractions required")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ValueError(f"fractions must sum to 1, got {sum(self.fractions)}")


def save_image(img: np.ndarray, path) -> None:
    """Write an 8-bit grayscale image as PNG or PGM by extension."""
    arr = np.asarray(img, dtype=np.uint8)
    Image.fromarray(arr, mode="L").save(path)


def load_image(path) -> np.ndarray:
    """Read a PNG or PGM image as an 8-bit grayscale array."""
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def write_manifest(records, path) -> None:
    """Write `(relative_path, class_id, split)` records, one per line."""
    lines = []
    for rel, class_id, split in records:
        if "\t" in rel:
            raise ValueError(f"path {rel!r} contains a tab")
        lines.append(f"{rel}\t{int(class_id)}\t{split if split else '-'}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_manifest(path) -> list[tuple[str, int, str | None]]:
    """Parse a manifest into `(relative_path, class_id, split)` records."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
            rel, class_str, split = parts
            if split not in SPLITS and split != "-":
                raise ValueError(f"{path}:{lineno}: unknown split {split!r}")
            records.append((rel, int(class_str), None if split == "-" else split))
    return records


def save_dataset(samples, out_dir, image_format: str = "png") -> str:
    """Write sample images plus a manifest; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    records = []
    counters: dict[int, int] = {}
    for s in samples:
        idx = counters.get(s.class_id, 0)
        counters[s.class_id] = idx + 1
        rel = f"c{s.class_id:03d}_{idx:04d}.{image_format}"
        save_image(s.image, os.path.join(out_dir, rel))
        records.append((rel, s.class_id, s.split))
    manifest = os.path.join(out_dir, "manifest.tsv")
    write_manifest(records, manifest)
    return manifest


def load_dataset(manifest_path) -> list[LabeledSample]:
    """Load every manifest record's image relative to the manifest."""
    base = os.path.dirname(os.path.abspath(manifest_path))
    samples = []
    for rel, class_id, split in read_manifest(manifest_path):
        img = load_image(os.path.join(base, rel))
        samples.append(LabeledSample(image=img, class_id=class_id, split=split))
    return samples


def assign_splits(class_ids, cfg: SplitConfig = SplitConfig()) -> list[str]:
    """Stratified split names for a class-id sequence.

    Validation and test sizes round down per class; the remainder stays
    in training, so a class of 200 yields 100/50/50. Classes need at
    least 4 samples so every split is populated.
    """
    class_ids = [int(c) for c in class_ids]
    by_class: dict[int, list[int]] = {}
    for i, class_id in enumerate(class_ids):
        by_class.setdefault(class_id, []).append(i)
    rng = np.random.default_rng(cfg.seed)
    assignment = [""] * len(class_ids)
    for class_id in sorted(by_class):
        idxs = by_class[class_id]
        n = len(idxs)
        if n < 4:
            raise ValueError(f"class {class_id} has only {n} samples; need at least 4")
        n_val = int(n * cfg.fractions[1])
        n_test = int(n * cfg.fractions[2])
        order = rng.permutation(n)
        for pos in order[:n_val]:
            assignment[idxs[pos]] = "validation"
        for pos in order[n_val : n_val + n_test]:
            assignment[idxs[pos]] = "test"
        for pos in order[n_val + n_test :]:
            assignment[idxs[pos]] = "train"
    return assignment


def split_dataset(samples, cfg: SplitConfig = SplitConfig()) -> list[LabeledSample]:
    """Samples with train/validation/test splits assigned, stratified per class."""
    names = assign_splits([s.class_id for s in samples], cfg)
    return [replace(s, split=name) for s, name in zip(samples, names)]


def split_views(samples) -> dict[str, list[LabeledSample]]:
    """Samples grouped by split name; unassigned samples are rejected."""
    views: dict[str, list[LabeledSample]] = {name: [] for name in SPLITS}
    for s in samples:
        if s.split not in views:
            raise ValueError(f"sample with class {s.class_id} has no split assigned")
        views[s.split].append(s)
    return views
