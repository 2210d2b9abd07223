"""Power-domain superposition and the three receiver chains.

T-NOMA superposes each user's QAM symbols and every receiver runs SIC down
to its own layer.  H-NOMA first spreads one bit per user across the group
with the unnormalized Hadamard matrix; transformed value ``k`` becomes
layer ``k`` of the superposition.  Usman-NOMA spreads modulated symbols with
the unitary matrix over ``N`` channel uses instead.

H-NOMA layer alphabets.  Row 1 of ``H`` is all ones, so its shifted value
lies in ``N/2..3N/2``; every other row is balanced and its shifted value
lies in ``0..N``.  Each layer therefore uses its own ``N+1``-level PAM,
centred on its row's mean, scaled to unit energy under the row's actual
level distribution.  Odd layers ride the in-phase axis and even layers the
quadrature axis, which keeps adjacent power levels from folding onto each
other.  All gains below are complex; ``y`` arrays are received samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from ._validation import check_alphas, check_bits, check_nonzero, check_unit_interval
from .hadamard import (
    HadamardMatrix,
    build_hadamard,
    forward_transform,
    inverse_transform,
    normalized_hadamard,
)
from .modem import (
    Constellation,
    bits_to_labels,
    build_square_qam,
    demap,
    hadamard_level_distribution,
    labels_to_bits,
)

__all__ = [
    "PowerProfile",
    "SuperposedSignal",
    "SicReport",
    "superpose",
    "sic_decode",
    "tnoma_transmit",
    "tnoma_sic_receive",
    "HnomaCodebook",
    "build_hnoma_codebook",
    "hnoma_transmit",
    "hnoma_receive",
    "usman_chip_alphabet",
    "usman_noma_transmit",
    "usman_noma_receive",
    "sic_identity_check",
    "DETECTORS",
]

DETECTORS = ("joint", "sic")
# joint detection enumerates 2^N codewords per sample
MAX_JOINT_ORDER = 10


@dataclass(frozen=True)
class PowerProfile:
    total_power: float
    alphas: np.ndarray

    def __post_init__(self):
        if not self.total_power >= 0:
            raise ValueError(f"total power must be >= 0, got {self.total_power}")
        a = check_alphas(self.alphas)
        a.setflags(write=False)
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "total_power", float(self.total_power))

    @property
    def n_layers(self) -> int:
        return len(self.alphas)

    @property
    def powers(self) -> np.ndarray:
        return self.total_power * self.alphas

    def amplitudes(self, energies=None) -> np.ndarray:
        e = np.ones(self.n_layers) if energies is None else np.asarray(energies, float)
        return np.sqrt(self.powers / e)


@dataclass(frozen=True)
class SuperposedSignal:
    samples: np.ndarray
    layer_count: int


@dataclass
class SicReport:
    """Per-layer outcomes in decoding order (largest power first)."""

    order: list
    decisions: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    forced: list = field(default_factory=list)

    def decision_for(self, layer: int) -> np.ndarray:
        return self.decisions[self.order.index(layer)]


def superpose(layers, profile: PowerProfile, energies=None) -> SuperposedSignal:
    """``x = sum_k sqrt(Ps alpha_k / E_k) x_k`` samplewise.

    ``layers`` is a sequence of equal-length streams or an array whose last
    axis indexes the layers.
    """
    if isinstance(layers, np.ndarray) and layers.ndim >= 2:
        stack = layers.astype(complex)
    else:
        lens = {np.shape(s) for s in layers}
        if len(lens) != 1:
            raise ValueError(f"layer streams differ in shape: {sorted(lens)}")
        stack = np.stack([np.asarray(s, complex) for s in layers], axis=-1)
    if stack.shape[-1] != profile.n_layers:
        raise ValueError(
            f"{stack.shape[-1]} layers given, power profile has {profile.n_layers}"
        )
    if energies is not None and np.any(np.asarray(energies, float) <= 0):
        raise ValueError("per-layer energies must be positive")
    x = stack @ profile.amplitudes(energies).astype(complex)
    return SuperposedSignal(x, profile.n_layers)


def sic_decode(
    y,
    gain,
    amplitudes,
    constellations,
    stop_after: int | None = None,
    residual_rho: float = 0.0,
    forced: dict | None = None,
) -> SicReport:
    """Successive cancellation over layers ordered by decreasing amplitude.

    ``amplitudes[j]`` is the transmit amplitude of layer ``j`` and
    ``constellations[j]`` its alphabet; the input order is arbitrary.
    Decoding stops once layer ``stop_after`` (an input index) is decided.
    ``forced`` maps input indices to label arrays that replace the decision
    of that layer, for error-propagation studies.  A fraction
    ``residual_rho`` of each reconstructed layer's power stays behind.
    """
    y = np.asarray(y, complex)
    gain = np.asarray(gain, complex)
    if np.any(gain == 0):
        raise ValueError("channel gain must be nonzero")
    amps = np.asarray(amplitudes, float)
    if len(constellations) != len(amps):
        raise ValueError("one constellation per layer is required")
    rho = check_unit_interval(residual_rho, "residual_rho")
    forced = forced or {}
    order = [int(j) for j in np.argsort(-amps, kind="stable")]
    if len(set(amps.tolist())) != len(amps):
        raise ValueError("layer amplitudes must be distinct to fix a decoding order")
    keep = 1.0 - math.sqrt(rho)
    report = SicReport(order=[])
    r = y
    for j in order:
        c = constellations[j]
        scale = amps[j] * gain
        if j in forced:
            labels = np.broadcast_to(np.asarray(forced[j], np.int64), y.shape).copy()
            report.forced.append(True)
        else:
            labels = demap(r, scale, c)
            report.forced.append(False)
        r = r - keep * scale * c.points[c.index_of(labels)]
        report.order.append(j)
        report.decisions.append(labels)
        report.residuals.append(r)
        if stop_after is not None and j == stop_after:
            break
    return report


# ---------------------------------------------------------------- T-NOMA


def _qam(c):
    return build_square_qam(4) if c is None else c


def tnoma_transmit(bits, profile: PowerProfile, constellation: Constellation | None = None):
    """Superpose per-user QAM symbols.

    ``bits`` has shape ``(n_uses, K, bits_per_symbol)``.
    """
    c = _qam(constellation)
    bits = check_bits(bits)
    if bits.ndim != 3 or bits.shape[1] != profile.n_layers:
        raise ValueError(
            f"bits must have shape (n, {profile.n_layers}, {c.bits_per_symbol}), "
            f"got {bits.shape}"
        )
    labels = bits_to_labels(bits, c.bits_per_symbol)[..., 0]
    return superpose(c.points[c.index_of(labels)], profile, energies=[c.avg_energy] * profile.n_layers)


def tnoma_sic_receive(
    y,
    gain,
    profile: PowerProfile,
    constellations,
    own_layer: int,
    residual_rho: float = 0.0,
    forced: dict | None = None,
    return_report: bool = False,
):
    """Decode layers ``0..own_layer`` (zero based) by SIC; return their labels.

    ``constellations`` is one alphabet shared by all layers or a list.
    """
    K = profile.n_layers
    if not 0 <= own_layer < K:
        raise ValueError(f"own layer {own_layer} out of range for {K} layers")
    if isinstance(constellations, Constellation):
        constellations = [constellations] * K
    energies = [c.avg_energy for c in constellations]
    rep = sic_decode(y, gain, profile.amplitudes(energies), constellations,
                     stop_after=own_layer, residual_rho=residual_rho, forced=forced)
    out = [rep.decision_for(j) for j in range(own_layer + 1)]
    return (out, rep) if return_report else out


# ---------------------------------------------------------------- H-NOMA


@dataclass(frozen=True)
class HnomaCodebook:
    """Layer alphabets and the composite codebook for one Hadamard order."""

    hadamard: HadamardMatrix
    layers: tuple
    row_offsets: np.ndarray

    @property
    def order(self) -> int:
        return self.hadamard.order

    def codewords(self) -> tuple[np.ndarray, np.ndarray]:
        """All ``2^N`` bit blocks and their shifted transforms."""
        N = self.order
        if N > MAX_JOINT_ORDER:
            raise ValueError(f"codeword enumeration limited to N <= {MAX_JOINT_ORDER}")
        d = np.array(list(product((0, 1), repeat=N)), dtype=np.int8)
        return d, forward_transform(d, self.hadamard).shifted

    def layer_symbols(self, shifted) -> np.ndarray:
        shifted = np.asarray(shifted)
        return np.stack(
            [c.points[c.index_of(shifted[..., k])] for k, c in enumerate(self.layers)],
            axis=-1,
        )

    def composite(self, profile: PowerProfile) -> tuple[np.ndarray, np.ndarray]:
        """Noise-free superposed point of every codeword, with the bit blocks."""
        d, wp = self.codewords()
        return d, superpose(self.layer_symbols(wp), profile).samples


def build_hnoma_codebook(order: int) -> HnomaCodebook:
    h = build_hadamard(order)
    N = h.order
    if N < 2:
        raise ValueError("H-NOMA needs at least two users")
    layers, offsets = [], []
    for k in range(N):
        dist = hadamard_level_distribution(N, row=k)
        lo = N // 2 if k == 0 else 0
        p = dist[lo:lo + N + 1]
        amps = 2 * np.arange(N + 1) - N
        kappa = 1.0 / math.sqrt(float(np.sum(p * amps**2)))
        rot = 1.0 if k % 2 == 0 else 1j
        layers.append(
            Constellation(f"hnoma{N}_row{k}", rot * kappa * amps, np.arange(lo, lo + N + 1),
                          p, kappa)
        )
        offsets.append(lo)
    return HnomaCodebook(h, tuple(layers), np.array(offsets))


def hnoma_transmit(bits, profile: PowerProfile, codebook: HnomaCodebook) -> SuperposedSignal:
    """One channel use per bit block: all ``N`` transformed layers superposed."""
    N = codebook.order
    if profile.n_layers != N:
        raise ValueError(f"power profile has {profile.n_layers} layers, order is {N}")
    bits = check_bits(bits, N)
    wp = forward_transform(bits, codebook.hadamard).shifted
    return superpose(codebook.layer_symbols(wp), profile)


def hnoma_receive(
    y,
    gain,
    profile: PowerProfile,
    codebook: HnomaCodebook,
    detector: str = "joint",
    residual_rho: float = 0.0,
    forced: dict | None = None,
    return_report: bool = False,
):
    """Recover every user's bit from each received sample.

    ``detector="joint"`` picks the nearest of the ``2^N`` composite
    codewords.  ``detector="sic"`` cancels the transformed layers one by one
    and passes the decided levels through the inverse transform; ``forced``
    and ``residual_rho`` only apply there.  Returns bits of shape
    ``(n, N)``.
    """
    y = np.asarray(y, complex)
    if y.ndim != 1:
        raise ValueError(f"expected one sample per block, got shape {y.shape}")
    gain = np.broadcast_to(np.asarray(gain, complex), y.shape)
    if np.any(gain == 0):
        raise ValueError("channel gain must be nonzero")
    if profile.n_layers != codebook.order:
        raise ValueError("power profile and codebook disagree on the group size")
    if detector == "joint":
        d, comp = codebook.composite(profile)
        book = Constellation("composite", comp, np.arange(len(comp)),
                             np.full(len(comp), 1.0 / len(comp)))
        idx = demap(y, gain, book)
        return (d[idx], None) if return_report else d[idx]
    if detector != "sic":
        raise ValueError(f"unknown detector {detector!r}; expected one of {DETECTORS}")
    rep = sic_decode(y, gain, profile.amplitudes(), list(codebook.layers),
                     residual_rho=residual_rho, forced=forced)
    wp = np.stack([rep.decision_for(k) for k in range(codebook.order)], axis=-1)
    bits = inverse_transform(wp, codebook.hadamard)
    bits = np.atleast_2d(bits)
    return (bits, rep) if return_report else bits


# ---------------------------------------------------------------- Usman-NOMA


def usman_chip_alphabet(constellation: Constellation, order: int) -> Constellation:
    """Every value a unitary-spread chip can take.

    For square QAM the axes separate, so the chip set is the product of the
    per-axis sumsets ``sum_j (+/-) a_j / sqrt(N)``.
    """
    re = np.unique(np.round(constellation.points.real, 12))
    im = np.unique(np.round(constellation.points.imag, 12))
    sums = []
    for axis in (re, im):
        acc = np.zeros(1)
        for _ in range(order):
            acc = np.unique(np.round((acc[:, None] + axis[None, :]).ravel(), 12))
        sums.append(acc / math.sqrt(order))
    pts = (sums[0][:, None] + 1j * sums[1][None, :]).ravel()
    return Constellation(f"chips{order}", pts, np.arange(len(pts)),
                         np.full(len(pts), 1.0 / len(pts)))


def usman_noma_transmit(symbols, profile: PowerProfile, order: int | None = None):
    """Spread each user's symbol block with the unitary matrix, then superpose.

    ``symbols`` has shape ``(n_blocks, K, N)``; output is ``(n_blocks, N)``.
    """
    s = np.asarray(symbols, complex)
    if s.ndim != 3 or s.shape[1] != profile.n_layers:
        raise ValueError(f"symbols must have shape (n, {profile.n_layers}, N), got {s.shape}")
    N = s.shape[2] if order is None else order
    if s.shape[2] != N:
        raise ValueError(f"block length {s.shape[2]} does not match order {N}")
    chips = s @ normalized_hadamard(N).T
    return SuperposedSignal(np.moveaxis(chips, 1, -1) @ profile.amplitudes().astype(complex),
                            profile.n_layers)


def usman_noma_receive(
    y,
    gain,
    profile: PowerProfile,
    constellation: Constellation,
    own_layer: int,
    chip_alphabet: Constellation | None = None,
):
    """Chip-level SIC down to ``own_layer``, then despread and demap.

    ``y`` has shape ``(n_blocks, N)``; ``gain`` broadcasts to it.  Returns
    labels of shape ``(n_blocks, N)``.
    """
    y = np.asarray(y, complex)
    if y.ndim != 2:
        raise ValueError(f"expected (n_blocks, N) samples, got shape {y.shape}")
    N = y.shape[1]
    gain = np.broadcast_to(np.asarray(gain, complex), y.shape)
    chips_c = chip_alphabet or usman_chip_alphabet(constellation, N)
    K = profile.n_layers
    rep = sic_decode(y, gain, profile.amplitudes(), [chips_c] * K, stop_after=own_layer)
    chips = chips_c.points[chips_c.index_of(rep.decision_for(own_layer))]
    soft = chips @ normalized_hadamard(N)
    return demap(soft, 1.0, constellation)


# ---------------------------------------------------------------- identities


def sic_identity_check(x1, x2, P1, P2, g, n) -> dict:
    """Substitute draws into the two-user combining identities.

    Near user (after a correct first-layer decision): the direct estimate of
    the weak layer is ``x2 + n/(g sqrt P2)``; passing the decided pair
    through the inverse 2x2 transform halves that noise.  Far user: the
    half-sum of the stated sum and difference estimates is compared with its
    closed form.  Residuals are elementwise and complex.
    """
    x1, x2, n = (np.asarray(v, complex) for v in (x1, x2, n))
    if not (P1 > 0 and P2 > 0):
        raise ValueError("powers must be positive")
    g = check_nonzero(g, "g") if np.ndim(g) == 0 else np.asarray(g, complex)
    if np.any(g == 0):
        raise ValueError("g must be nonzero")
    s1, s2 = math.sqrt(P1), math.sqrt(P2)
    e2 = n / (g * s2)

    # near user: SIC leaves x1 exact and x2 with the full noise
    x1_hat, x2_hat = x1, x2 + e2
    direct_noise = x2_hat - x2
    combined = 0.5 * (x1_hat - x2_hat)
    combined_noise = combined - 0.5 * (x1 - x2)
    diff_direct = x1_hat - x2_hat
    diff_plus = x1 - x2 + e2
    diff_minus = x1 - x2 - e2

    # far user: stated sum and difference estimates, then their half-sum
    ratio = math.sqrt(P2 / P1)
    S = x1 + x2 + ratio * (x1 - x2) + n / (g * s1)
    T = x1 - x2 + e2
    far_combined = 0.5 * (S + T)
    far_formula = (0.5 * (2 + ratio) * x1 - 0.5 * ratio * x2
                   + n / (2 * g * s1) + n / (2 * g * s2))
    # the per-symbol far estimates give a different sum
    x1_far = x1 + ratio * x2 + n / (g * s1)
    S_direct = x1_far + x2_hat

    return {
        "near_direct_noise": direct_noise,
        "near_combined_noise": combined_noise,
        "near_combined_residual": combined_noise + 0.5 * e2,
        "near_diff_residual_plus": diff_direct - diff_plus,
        "near_diff_residual_minus": diff_direct - diff_minus,
        "near_diff_sign_matching": "minus"
        if np.max(np.abs(diff_direct - diff_minus), initial=0.0)
        <= np.max(np.abs(diff_direct - diff_plus), initial=0.0)
        else "plus",
        "far_combined": far_combined,
        "far_formula": far_formula,
        "far_residual": far_combined - far_formula,
        "far_sum_mismatch": S_direct - S,
    }


def labels_to_user_bits(labels, constellation: Constellation) -> np.ndarray:
    return labels_to_bits(labels, constellation.bits_per_symbol)
