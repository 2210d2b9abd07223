"""Constellations, label mapping and minimum-distance demapping.

Two families are provided:

* square M-QAM with a per-axis reflected Gray code (4, 16 and 64 points);
* level-indexed real PAM, where level ``l`` of ``L`` sits at
  ``(2l - (L-1)) * kappa`` and ``kappa`` is fixed by the actual level
  distribution rather than a uniform one.

Gray table for square QAM.  With ``m = log2(sqrt(M))`` bits per axis, the
in-phase level index ``i`` (0 = most negative amplitude) and quadrature level
index ``q`` give the label ``(gray(i) << m) | gray(q)`` where
``gray(n) = n ^ (n >> 1)``.  Amplitudes are ``2i - (sqrt(M)-1)`` before the
unit-energy scaling.  For QPSK this reads::

    label 0 (00) -> (-1 - 1j)/sqrt(2)      label 2 (10) -> (+1 - 1j)/sqrt(2)
    label 1 (01) -> (-1 + 1j)/sqrt(2)      label 3 (11) -> (+1 + 1j)/sqrt(2)

Labels are read MSB first when converted to bits.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .hadamard import build_hadamard, forward_transform

__all__ = [
    "Constellation",
    "SymbolStream",
    "build_bpsk",
    "build_square_qam",
    "build_shifted_integer_pam",
    "hadamard_level_distribution",
    "map_labels",
    "ml_demap",
    "demap",
    "labels_to_bits",
    "bits_to_labels",
    "gray",
]

SUPPORTED_QAM = (4, 16, 64)


def gray(n):
    return n ^ (n >> 1)


@dataclass(frozen=True)
class Constellation:
    """Finite complex alphabet.

    ``points[i]`` carries ``labels[i]``; points are stored in ascending label
    order so that ``argmin`` ties resolve to the lowest label.
    ``probabilities`` is the input distribution the energy is normalized
    under, ``kappa`` the amplitude scale that was applied.
    """

    name: str
    points: np.ndarray
    labels: np.ndarray
    probabilities: np.ndarray
    kappa: float = 1.0
    bits_per_symbol: int | None = None

    def __post_init__(self):
        order = np.argsort(self.labels, kind="stable")
        object.__setattr__(self, "points", np.asarray(self.points, complex)[order])
        object.__setattr__(self, "labels", np.asarray(self.labels, np.int64)[order])
        object.__setattr__(
            self, "probabilities", np.asarray(self.probabilities, float)[order]
        )
        if len(set(self.labels.tolist())) != len(self.labels):
            raise ValueError("constellation labels must be unique")
        for arr in (self.points, self.labels, self.probabilities):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.points)

    @property
    def avg_energy(self) -> float:
        return float(np.sum(self.probabilities * np.abs(self.points) ** 2))

    def energy_under(self, probabilities) -> float:
        """Mean energy when labels occur with the given probabilities."""
        p = np.asarray(probabilities, float)
        return float(np.sum(p * np.abs(self.points) ** 2))

    def label_distribution(self, labels) -> np.ndarray:
        """Empirical probability of each label (in point order)."""
        idx = self.index_of(labels)
        counts = np.bincount(np.ravel(idx), minlength=len(self))
        return counts / max(counts.sum(), 1)

    def index_of(self, labels) -> np.ndarray:
        """Point indices for ``labels``; unknown labels raise ``ValueError``."""
        arr = np.asarray(labels, dtype=np.int64)
        flat = arr.ravel()
        lut_size = int(self.labels.max()) + 1
        lut = np.full(lut_size, -1, dtype=np.int64)
        lut[self.labels] = np.arange(len(self))
        ok = (flat >= 0) & (flat < lut_size)
        idx = np.full(flat.shape, -1, dtype=np.int64)
        idx[ok] = lut[flat[ok]]
        bad = np.flatnonzero(idx < 0)
        if bad.size:
            raise ValueError(
                f"label {int(flat[bad[0]])} at index {int(bad[0])} "
                f"is not in constellation {self.name}"
            )
        return idx.reshape(arr.shape)


@dataclass(frozen=True)
class SymbolStream:
    symbols: np.ndarray
    source_labels: np.ndarray

    def __post_init__(self):
        if np.shape(self.symbols) != np.shape(self.source_labels):
            raise ValueError("symbols and labels must have the same shape")

    def __len__(self):
        return len(self.symbols)


def build_bpsk() -> Constellation:
    return Constellation("bpsk", [-1.0, 1.0], [0, 1], [0.5, 0.5], 1.0, 1)


def build_square_qam(M: int) -> Constellation:
    """Gray-labelled square QAM with unit average energy."""
    if M not in SUPPORTED_QAM:
        raise ValueError(f"square QAM order must be one of {SUPPORTED_QAM}, got {M}")
    side = int(round(np.sqrt(M)))
    m = side.bit_length() - 1
    amps = 2 * np.arange(side) - (side - 1)
    kappa = 1.0 / np.sqrt(2 * np.mean(amps.astype(float) ** 2))
    points, labels = [], []
    for i, q in product(range(side), range(side)):
        labels.append((gray(i) << m) | gray(q))
        points.append(kappa * complex(amps[i], amps[q]))
    return Constellation(
        f"qam{M}", points, labels, np.full(M, 1.0 / M), float(kappa), 2 * m
    )


def hadamard_level_distribution(
    order: int, row: int | None = None, mc_samples: int = 10**6, seed: int = 0
) -> np.ndarray:
    """Probability of each shifted level ``0..3N/2`` under uniform input bits.

    ``row=None`` pools all rows.  Exhaustive for ``order <= 8``; otherwise a
    fixed-seed Monte Carlo estimate over ``mc_samples`` blocks.
    """
    h = build_hadamard(order)
    n_levels = 3 * order // 2 + 1
    if order <= 8:
        d = np.array(list(product((0, 1), repeat=order)), dtype=np.int8)
    else:
        rng = np.random.default_rng(seed)
        d = rng.integers(0, 2, size=(mc_samples, order), dtype=np.int8)
    shifted = np.atleast_2d(forward_transform(d, h).shifted)
    vals = shifted if row is None else shifted[:, row]
    counts = np.bincount(np.ravel(vals), minlength=n_levels)
    return counts / counts.sum()


def build_shifted_integer_pam(
    level_count: int, distribution=None, name: str | None = None
) -> Constellation:
    """Real PAM over integer levels ``0..L-1`` normalized to unit energy.

    ``distribution`` gives the probability of each level; uniform if omitted.
    Levels with zero probability stay in the alphabet (the demapper may
    still decide them) but carry no energy weight.
    """
    L = int(level_count)
    if L < 2:
        raise ValueError(f"level_count must be >= 2, got {level_count}")
    p = np.full(L, 1.0 / L) if distribution is None else np.asarray(distribution, float)
    if p.shape != (L,) or np.any(p < 0) or abs(p.sum() - 1) > 1e-9:
        raise ValueError("distribution must be a probability vector over the levels")
    amps = 2 * np.arange(L) - (L - 1)
    energy = float(np.sum(p * amps**2))
    if energy == 0:
        raise ValueError("distribution puts all mass on a zero-amplitude level")
    kappa = 1.0 / np.sqrt(energy)
    bps = int(np.log2(L)) if L & (L - 1) == 0 else None
    return Constellation(
        name or f"pam{L}", kappa * amps.astype(complex), np.arange(L), p, kappa, bps
    )


def map_labels(labels, c: Constellation) -> SymbolStream:
    labels = np.asarray(labels, dtype=np.int64)
    return SymbolStream(c.points[c.index_of(labels)], labels)


def demap(y, scale, c: Constellation) -> np.ndarray:
    """Vectorized minimum-distance decision ``argmin |y - scale * p|^2``.

    ``scale`` broadcasts against ``y``.  Returns labels with the shape of
    ``y``; equidistant points resolve to the lowest label.
    """
    y = np.asarray(y, dtype=complex)
    s = np.broadcast_to(np.asarray(scale, dtype=complex), y.shape)
    if np.any(s == 0):
        raise ValueError("demapping scale must be nonzero")
    flat_y, flat_s = y.ravel(), s.ravel()
    out = np.empty(flat_y.shape, dtype=np.int64)
    step = max(1, 2**20 // len(c))
    for lo in range(0, flat_y.size, step):
        sl = slice(lo, lo + step)
        diff = flat_y[sl, None] - flat_s[sl, None] * c.points[None, :]
        dist = diff.real**2 + diff.imag**2
        out[sl] = np.argmin(dist, axis=1)
    return c.labels[out].reshape(y.shape)


def ml_demap(y: complex, scale: complex, c: Constellation) -> int:
    """Label of the point closest to ``y`` after scaling by ``scale``."""
    if complex(scale) == 0:
        raise ValueError("demapping scale must be nonzero")
    return int(demap(np.array([y]), scale, c)[0])


def labels_to_bits(labels, bits_per_symbol: int) -> np.ndarray:
    """Expand integer labels to bits, MSB first, along a new last axis."""
    labels = np.asarray(labels, dtype=np.int64)
    shifts = np.arange(bits_per_symbol - 1, -1, -1)
    return ((labels[..., None] >> shifts) & 1).astype(np.int8)


def bits_to_labels(bits, bits_per_symbol: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[-1] % bits_per_symbol:
        raise ValueError(
            f"bit count {bits.shape[-1]} is not a multiple of {bits_per_symbol}"
        )
    grouped = bits.reshape(*bits.shape[:-1], -1, bits_per_symbol)
    weights = 1 << np.arange(bits_per_symbol - 1, -1, -1)
    return grouped @ weights
