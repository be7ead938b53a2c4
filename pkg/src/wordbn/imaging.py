"""Image preprocessing: binarization, block and sliding-window decomposition.

Word images follow the dark-ink-on-white convention (0 = ink, 255 =
background). Reading order is right-to-left, so block and horizontal
window sequences start at the right edge of the image.
"""

import numpy as np

from ._validation import check_gray_image

BACKGROUND = 255
INK = 0


def otsu_threshold(img) -> int:
    """Threshold maximizing between-class variance over the 256-bin histogram.

    Pixels <= threshold are the ink class. Ties resolve to the lowest
    threshold, so a constant image yields threshold 0.
    """
    arr = check_gray_image(img).astype(np.uint8)
    hist = np.bincount(arr.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    w0 = np.cumsum(hist)                       # mass of [0..t]
    m = np.cumsum(hist * np.arange(256))       # first moment of [0..t]
    w1 = total - w0
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = m / w0
        mu1 = (m[-1] - m) / w1
        var_between = w0 * w1 * (mu0 - mu1) ** 2
    var_between[~np.isfinite(var_between)] = 0.0
    return int(np.argmax(var_between))


def binarize(img, method: str = "otsu", threshold: int = 128) -> np.ndarray:
    """Binarize a grayscale image to {0, 255} with ink mapped to 0.

    method "otsu" picks the threshold automatically; method "fixed"
    uses `threshold`. Pixels <= threshold become ink.
    """
    arr = check_gray_image(img)
    if method == "otsu":
        t = otsu_threshold(arr)
    elif method == "fixed":
        t = int(threshold)
    else:
        raise ValueError(f"unknown binarization method {method!r}")
    out = np.where(arr <= t, INK, BACKGROUND).astype(np.uint8)
    return out


def split_blocks(img, n: int) -> list[np.ndarray]:
    """Cut an image into n vertical strips, returned right-to-left.

    Strip widths differ by at most one pixel; when the width is not
    divisible by n the wider strips sit at the right edge, so the first
    blocks in reading order absorb the remainder.
    """
    arr = check_gray_image(img)
    n = int(n)
    if n < 1:
        raise ValueError(f"block count must be >= 1, got {n}")
    width = arr.shape[1]
    if n > width:
        raise ValueError(f"too many blocks: {n} requested for width {width}")
    base, rem = divmod(width, n)
    widths = [base + 1 if i < rem else base for i in range(n)]
    blocks = []
    right = width
    for w in widths:
        blocks.append(arr[:, right - w : right])
        right -= w
    return blocks


def join_blocks(blocks: list[np.ndarray]) -> np.ndarray:
    """Reassemble a right-to-left block list into the source image."""
    return np.concatenate(list(reversed(blocks)), axis=1)


def sliding_windows(img, axis: str, window: int) -> list[np.ndarray]:
    """Fixed-size analysis windows along one axis, in reading order.

    Horizontal windows are full-height strips scanned right-to-left;
    vertical windows are full-width strips scanned top-to-bottom. The
    image is padded with background (on the left for horizontal, at the
    bottom for vertical) up to the next multiple of `window`, so the
    first windows in reading order are unpadded. Windows tile the
    padded image; no segmentation of the content is attempted.
    """
    arr = check_gray_image(img)
    window = int(window)
    if window <= 0:
        raise ValueError(f"window size must be positive, got {window}")
    if axis == "horizontal":
        dim = arr.shape[1]
        pad = (-dim) % window
        if pad:
            arr = np.pad(arr, ((0, 0), (pad, 0)), constant_values=BACKGROUND)
        count = arr.shape[1] // window
        return [
            arr[:, arr.shape[1] - (i + 1) * window : arr.shape[1] - i * window]
            for i in range(count)
        ]
    if axis == "vertical":
        dim = arr.shape[0]
        pad = (-dim) % window
        if pad:
            arr = np.pad(arr, ((0, pad), (0, 0)), constant_values=BACKGROUND)
        count = arr.shape[0] // window
        return [arr[i * window : (i + 1) * window, :] for i in range(count)]
    raise ValueError(f"axis must be 'horizontal' or 'vertical', got {axis!r}")
