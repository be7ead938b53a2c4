"""Synthetic word-image generator for end-to-end experiments.

Each class gets a fixed signature: 2-4 elliptical ink blobs per block
region, laid out by a class-seeded RNG. Individual samples jitter the
blob positions, sizes and angles with Gaussian noise whose scale grows
with (1 - separability), so separability 1.0 reproduces the signature
exactly and lower values blur the classes into each other.
"""

from dataclasses import dataclass

import numpy as np

from .imaging import BACKGROUND, INK


@dataclass
class LabeledSample:
    """One dataset record: an image, its 1-based class id, and its split."""

    image: np.ndarray
    class_id: int
    split: str | None = None


@dataclass(frozen=True)
class _Blob:
    cx: float   # block-relative coords in [0, 1]
    cy: float
    rx: float   # radii as fractions of block extent
    ry: float
    angle: float


def _class_layout(seed: int, class_id: int, blocks: int) -> list[list[_Blob]]:
    rng = np.random.default_rng([seed, class_id, 0xB10B])
    layout = []
    for _ in range(blocks):
        blobs = []
        for _ in range(int(rng.integers(2, 5))):
            blobs.append(
                _Blob(
                    cx=float(rng.uniform(0.22, 0.78)),
                    cy=float(rng.uniform(0.22, 0.78)),
                    rx=float(rng.uniform(0.08, 0.20)),
                    ry=float(rng.uniform(0.08, 0.20)),
                    angle=float(rng.uniform(0.0, np.pi)),
                )
            )
        layout.append(blobs)
    return layout


def _render(layout, rng, noise: float, height: int, width: int) -> np.ndarray:
    img = np.full((height, width), BACKGROUND, dtype=np.uint8)
    blocks = len(layout)
    base, rem = divmod(width, blocks)
    # block x-extents left-to-right; layout index 0 is the rightmost block
    edges = []
    right = width
    for i in range(blocks):
        w = base + 1 if i < rem else base
        edges.append((right - w, right))
        right -= w
    ys = np.arange(height)
    for blobs, (x0, x1) in zip(layout, edges):
        bw = x1 - x0
        xs = np.arange(x0, x1)
        X, Y = np.meshgrid(xs, ys)
        for blob in blobs:
            cx = x0 + (blob.cx + rng.normal(0.0, noise * 0.6)) * bw
            cy = (blob.cy + rng.normal(0.0, noise * 0.6)) * height
            rx = blob.rx * np.exp(rng.normal(0.0, noise * 0.8)) * bw
            ry = blob.ry * np.exp(rng.normal(0.0, noise * 0.8)) * height
            rx = max(rx, 1.5)
            ry = max(ry, 1.5)
            ang = blob.angle + rng.normal(0.0, noise * 1.5)
            ca, sa = np.cos(ang), np.sin(ang)
            u = (X - cx) * ca + (Y - cy) * sa
            v = -(X - cx) * sa + (Y - cy) * ca
            inside = (u / rx) ** 2 + (v / ry) ** 2 <= 1.0
            img[:, x0:x1][inside] = INK
    return img


def generate_synthetic(
    classes: int,
    per_class: int,
    separability: float,
    seed: int,
    height: int = 96,
    width: int = 288,
    blocks: int = 3,
) -> list[LabeledSample]:
    """Generate a labeled synthetic dataset of blob-word images.

    Deterministic for a given seed: every sample is rendered from its
    own child RNG keyed by (seed, class_id, sample index). Class ids
    are 1-based. Splits are left unassigned.
    """
    classes = int(classes)
    per_class = int(per_class)
    if classes < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")
    if per_class < 1:
        raise ValueError(f"per_class must be >= 1, got {per_class}")
    if not 0.0 <= separability <= 1.0:
        raise ValueError(f"separability must lie in [0, 1], got {separability}")
    noise = 1.0 - float(separability)
    samples = []
    for class_id in range(1, classes + 1):
        layout = _class_layout(seed, class_id, blocks)
        for idx in range(per_class):
            rng = np.random.default_rng([seed, class_id, idx + 1])
            img = _render(layout, rng, noise, height, width)
            samples.append(LabeledSample(image=img, class_id=class_id))
    return samples
