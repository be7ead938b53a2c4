"""Input validation helpers shared across the package."""

import numpy as np


def check_gray_image(img, name: str = "image") -> np.ndarray:
    """Validate a 2-D grayscale image and return it as a numpy array.

    Accepts any array-like with integer or float values in [0, 255].
    Raises ValueError for empty or non-2-D input.
    """
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} is empty (shape {arr.shape})")
    return arr


def as_ink_mask(img) -> np.ndarray:
    """Boolean ink mask from a binary or grayscale image.

    Boolean arrays are taken as-is (True = ink). For numeric images,
    dark pixels (< 128) count as ink, matching the dark-ink-on-white
    convention used throughout.
    """
    arr = check_gray_image(img)
    if arr.dtype == bool:
        return arr
    return arr < 128


def check_label_matrix(X, n_attributes: int | None = None) -> np.ndarray:
    """Validate an (N, m) integer label matrix."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"label matrix must be 2-D, got shape {X.shape}")
    if not np.issubdtype(X.dtype, np.integer):
        Xi = X.astype(np.int64)
        if not np.array_equal(Xi, X):
            raise ValueError("label matrix must contain integers")
        X = Xi
    if np.any(X < 0):
        raise ValueError("labels must be non-negative")
    if n_attributes is not None and X.shape[1] != n_attributes:
        raise ValueError(
            f"expected {n_attributes} attribute columns, got {X.shape[1]}"
        )
    return X
