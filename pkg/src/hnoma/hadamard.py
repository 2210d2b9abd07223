"""Sylvester-Hadamard matrices and the bit-domain spreading transform.

The bit-domain transform works on the unnormalized +/-1 matrix so that the
transformed values stay integers (``w = H d`` with ``|w_k| <= N``).  The
unitary variant, scaled by ``1/sqrt(N)``, is used when complex symbols are
spread after modulation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_order

__all__ = [
    "HadamardMatrix",
    "TransformedVector",
    "build_hadamard",
    "normalized_hadamard",
    "fwht",
    "forward_transform",
    "inverse_transform",
    "slice_bits",
]

# above this order the butterfly replaces the dense product
FAST_THRESHOLD = 64


@dataclass(frozen=True)
class HadamardMatrix:
    order: int
    entries: np.ndarray

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def shift(self) -> int:
        """Affine offset ``m = N/2`` that makes every transformed entry >= 0."""
        return self.order // 2


@dataclass(frozen=True)
class TransformedVector:
    w: np.ndarray
    shifted: np.ndarray


def build_hadamard(order: int) -> HadamardMatrix:
    """Unnormalized Sylvester construction ``H_{2M} = H_M (x) H_2``."""
    order = check_order(order)
    h2 = np.array([[1, 1], [1, -1]], dtype=np.int64)
    h = np.ones((1, 1), dtype=np.int64)
    while h.shape[0] < order:
        h = np.kron(h, h2)
    return HadamardMatrix(order, h)


def normalized_hadamard(order: int) -> np.ndarray:
    """Unitary Hadamard matrix, each Kronecker level scaled by ``1/sqrt(2)``."""
    h = build_hadamard(order)
    return h.entries / np.sqrt(h.order)


def fwht(x: np.ndarray) -> np.ndarray:
    """Fast Walsh-Hadamard transform along the last axis (natural order).

    Equivalent to ``x @ H.T`` for the unnormalized Sylvester matrix.  Integer
    input stays integer; the butterfly only adds and subtracts.
    """
    a = np.array(x, copy=True)
    n = a.shape[-1]
    check_order(n)
    lead = a.shape[:-1]
    h = 1
    while h < n:
        a = a.reshape(*lead, n // (2 * h), 2, h)
        top = a[..., 0, :].copy()
        bot = a[..., 1, :]
        a[..., 0, :] = top + bot
        a[..., 1, :] = top - bot
        h *= 2
    return a.reshape(*lead, n)


def _apply(x: np.ndarray, h: HadamardMatrix) -> np.ndarray:
    if h.order > FAST_THRESHOLD:
        return fwht(x)
    return x @ h.entries.T


def _as_blocks(x, order: int, name: str) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[-1] != order:
        raise ValueError(
            f"{name} has length {arr.shape[-1]}, Hadamard order is {order}"
        )
    return arr, single


def forward_transform(d, h: HadamardMatrix) -> TransformedVector:
    """Spread a bit block (or a batch of blocks, one per row) with ``H``.

    >>> t = forward_transform([1, 1, 0, 1], build_hadamard(4))
    >>> t.w.tolist(), t.shifted.tolist()
    ([3, -1, 1, 1], [5, 1, 3, 3])
    """
    bits, single = _as_blocks(d, h.order, "bit block")
    if not np.isin(bits, (0, 1)).all():
        raise ValueError("bit block entries must be 0 or 1")
    w = _apply(bits.astype(np.int64), h)
    shifted = w + h.shift
    if single:
        return TransformedVector(w[0], shifted[0])
    return TransformedVector(w, shifted)


def slice_bits(raw: np.ndarray) -> np.ndarray:
    """Hard decision at 0.5; an exact tie resolves to 1."""
    return (np.asarray(raw) >= 0.5).astype(np.int8)


def inverse_transform(shifted, h: HadamardMatrix, return_raw: bool = False):
    """Undo the shift, apply ``(1/N) H`` and slice to bits.

    ``shifted`` may be real valued (noisy soft estimates).  With
    ``return_raw`` the unsliced estimates are returned as well.
    """
    wp, single = _as_blocks(shifted, h.order, "transformed vector")
    w = wp - h.shift
    if np.issubdtype(w.dtype, np.integer):
        # exact: H w is integer and N is a power of two
        raw = _apply(w.astype(np.int64), h) / h.order
    else:
        raw = _apply(w.astype(np.float64), h) / h.order
    bits = slice_bits(raw)
    if single:
        raw, bits = raw[0], bits[0]
    return (bits, raw) if return_raw else bits
