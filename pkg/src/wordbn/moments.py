"""Shape descriptors: central moments, Hu invariants, Zernike magnitudes.

Ink carries unit mass per pixel, so the zeroth moment equals the ink
area and the invariance properties can be checked against closed-form
values for simple shapes.

Central moments are assembled from raw integer moments in exact integer
arithmetic (one float division at the end). This keeps translation
invariance and the mirror antisymmetry of the seventh Hu invariant
bit-exact instead of merely approximate.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_ink_mask

#: (order, repetition) pairs whose magnitudes fill feature slots 8..12.
DEFAULT_ZERNIKE_INDICES = ((1, 1), (2, 0), (2, 2), (3, 1), (3, 3))


class EmptyInkError(ValueError):
    """Raised when an operation needs ink but the image has none."""


@dataclass(frozen=True)
class CentralMoments:
    """Moments about the ink centroid, orders 0..3.

    v00 equals the ink pixel count; v10 and v01 are zero by
    construction.
    """

    v00: float
    v10: float
    v01: float
    v20: float
    v11: float
    v02: float
    v30: float
    v21: float
    v12: float
    v03: float
    cx: float
    cy: float

    def get(self, p: int, q: int) -> float:
        return getattr(self, f"v{p}{q}")


def _raw_moments(mask: np.ndarray) -> dict[tuple[int, int], int]:
    """Raw moments sum(x^p y^q) over ink pixels, as exact Python ints.

    int64 sums are exact up to images ~4000 px on a side (third-order
    terms stay below 2**63).
    """
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        raise EmptyInkError("image contains no ink pixels")
    xs = xs.astype(np.int64)
    ys = ys.astype(np.int64)
    raw = {}
    xp = {0: None, 1: xs, 2: xs * xs, 3: xs * xs * xs}
    yq = {0: None, 1: ys, 2: ys * ys, 3: ys * ys * ys}
    for p in range(4):
        for q in range(4 - p):
            if p == 0 and q == 0:
                raw[p, q] = int(xs.size)
            elif q == 0:
                raw[p, q] = int(np.sum(xp[p]))
            elif p == 0:
                raw[p, q] = int(np.sum(yq[q]))
            else:
                raw[p, q] = int(np.sum(xp[p] * yq[q]))
    return raw


def central_moments(img) -> CentralMoments:
    """Central moments of the ink distribution, orders 0 through 3.

    Accepts a binary/grayscale image or boolean mask; raises
    EmptyInkError when there is no ink.
    """
    mask = as_ink_mask(img)
    raw = _raw_moments(mask)
    m00 = raw[0, 0]
    m10 = raw[1, 0]
    m01 = raw[0, 1]

    def central(p: int, q: int) -> float:
        # m00^(p+q) * v_pq expanded over raw moments; exact in int arithmetic
        num = 0
        for a in range(p + 1):
            for b in range(q + 1):
                num += (
                    math.comb(p, a)
                    * math.comb(q, b)
                    * (-m10) ** (p - a)
                    * (-m01) ** (q - b)
                    * m00 ** (a + b)
                    * raw[a, b]
                )
        return num / m00 ** (p + q)

    return CentralMoments(
        v00=float(m00),
        v10=central(1, 0),
        v01=central(0, 1),
        v20=central(2, 0),
        v11=central(1, 1),
        v02=central(0, 2),
        v30=central(3, 0),
        v21=central(2, 1),
        v12=central(1, 2),
        v03=central(0, 3),
        cx=m10 / m00,
        cy=m01 / m00,
    )


def hu_invariants(m: CentralMoments) -> np.ndarray:
    """The seven Hu moment invariants from central moments.

    Built on the scale-normalized moments u_pq = v_pq / v00^(1+(p+q)/2).
    Invariant to translation, rotation and uniform scale; the seventh
    changes sign under reflection.
    """
    if m.v00 <= 0:
        raise ValueError("zeroth moment must be positive")
    d2 = m.v00**2
    d3 = m.v00**2 * math.sqrt(m.v00)
    u20 = m.v20 / d2
    u02 = m.v02 / d2
    u11 = m.v11 / d2
    u30 = m.v30 / d3
    u21 = m.v21 / d3
    u12 = m.v12 / d3
    u03 = m.v03 / d3

    s1 = u30 + u12
    s2 = u21 + u03
    a = u30 - 3.0 * u12
    b = 3.0 * u21 - u03
    s1sq = s1 * s1
    s2sq = s2 * s2

    phi1 = u20 + u02
    phi2 = (u20 - u02) ** 2 + 4.0 * u11**2
    phi3 = a * a + b * b
    phi4 = s1sq + s2sq
    phi5 = a * s1 * (s1sq - 3.0 * s2sq) + b * s2 * (3.0 * s1sq - s2sq)
    phi6 = (u20 - u02) * (s1sq - s2sq) + 4.0 * u11 * s1 * s2
    phi7 = b * s1 * (s1sq - 3.0 * s2sq) - a * s2 * (3.0 * s1sq - s2sq)
    return np.array([phi1, phi2, phi3, phi4, phi5, phi6, phi7])


def zernike_radial(m: int, n: int, r):
    """Radial polynomial R_mn evaluated at r (scalar or array).

    Requires m >= 0, |n| <= m and m - |n| even.
    """
    m = int(m)
    n_abs = abs(int(n))
    if m < 0:
        raise ValueError(f"order must be non-negative, got {m}")
    if n_abs > m or (m - n_abs) % 2 != 0:
        raise ValueError(f"invalid index pair (m={m}, n={n}): need |n| <= m with m - |n| even")
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    for s in range((m - n_abs) // 2 + 1):
        coeff = (
            (-1) ** s
            * math.factorial(m - s)
            / (
                math.factorial(s)
                * math.factorial((m + n_abs) // 2 - s)
                * math.factorial((m - n_abs) // 2 - s)
            )
        )
        out = out + coeff * r ** (m - 2 * s)
    return out if out.ndim else float(out)


_GRID_CACHE: dict = {}


def _disk_grid(shape: tuple[int, int], radius: float | None):
    """Unit-disk pixel mapping for an image shape (cached).

    The disk is centered on the image; by default its radius is half
    the image diagonal so every pixel falls inside. An explicit radius
    (in pixels) shrinks the disk and excludes outside pixels.
    """
    key = (shape, radius)
    cached = _GRID_CACHE.get(key)
    if cached is not None:
        return cached
    h, w = shape
    cx = (w - 1) / 2.0
    cy = (h - 1) / 2.0
    if radius is None:
        rmax2 = ((w - 1) ** 2 + (h - 1) ** 2) / 4.0
    else:
        rmax2 = float(radius) ** 2
    if rmax2 <= 0:
        raise ValueError(f"disk radius must be positive, got {radius}")
    r_max = math.sqrt(rmax2)
    ys, xs = np.mgrid[0:h, 0:w]
    dx = xs - cx
    dy = ys - cy
    # the inside test compares exact quarter-integer distances, so the
    # farthest corner (at radius exactly r_max by default) stays inside
    dist2 = dx * dx + dy * dy
    inside = dist2 <= rmax2
    rr = np.minimum(np.sqrt(dist2) / r_max, 1.0)
    theta = np.arctan2(dy, dx)
    cached = (rr, theta, inside)
    if len(_GRID_CACHE) > 64:
        _GRID_CACHE.clear()
    _GRID_CACHE[key] = cached
    return cached


def _zernike_conj_basis(shape, indices, radius):
    key = (shape, tuple(indices), radius, "basis")
    cached = _GRID_CACHE.get(key)
    if cached is not None:
        return cached
    rr, theta, inside = _disk_grid(shape, radius)
    basis = []
    for m, n in indices:
        v_conj = zernike_radial(m, n, rr) * np.exp(1j * n * theta)
        basis.append(np.where(inside, v_conj, 0.0))
    cached = (np.stack(basis), inside)
    if len(_GRID_CACHE) > 64:
        _GRID_CACHE.clear()
    _GRID_CACHE[key] = cached
    return cached


def zernike_moments(img, indices=DEFAULT_ZERNIKE_INDICES, radius: float | None = None) -> np.ndarray:
    """Zernike moment magnitudes |A_mn| / |A_00| for the given indices.

    A_mn = (m+1)/pi * sum of ink mass times conj(V_mn) over pixels
    mapped into the unit disk. Dividing by |A_00| (the scaled ink area)
    keeps the selected magnitudes in a bounded range near [0, 1].
    """
    mask = as_ink_mask(img)
    indices = tuple((int(m), int(n)) for m, n in indices)
    for m, n in indices:
        zernike_radial(m, n, 0.0)  # validates the index pair
    basis, inside = _zernike_conj_basis(mask.shape, indices, radius)
    ink = mask & inside
    a00 = np.count_nonzero(ink) / math.pi
    if a00 == 0:
        raise EmptyInkError("no ink inside the unit disk")
    out = np.empty(len(indices))
    for k, (m, n) in enumerate(indices):
        a_mn = (m + 1) / math.pi * np.sum(basis[k][ink])
        out[k] = abs(a_mn) / a00
    return out


def feature_vector(img, zernike_indices=DEFAULT_ZERNIKE_INDICES, radius: float | None = None) -> np.ndarray:
    """12-component block descriptor: seven Hu invariants then five
    Zernike magnitudes, in fixed order."""
    mask = as_ink_mask(img)
    hu = hu_invariants(central_moments(mask))
    zk = zernike_moments(mask, zernike_indices, radius)
    return np.concatenate([hu, zk])
