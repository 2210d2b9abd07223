"""Flat-fading channel draws, estimation error and receiver noise.

All draws take an explicit ``numpy.random.Generator``.  :func:`stream`
derives independent counter-based (Philox) generators from one master seed
and a tuple of names, so a given (seed, names) pair always reproduces the
same sequence no matter which worker asks for it.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np
from scipy.stats import gamma as gamma_dist

from ._validation import check_positive, check_unit_interval

__all__ = [
    "stream",
    "cn",
    "rayleigh_gain",
    "nakagami_gain",
    "ChannelRealization",
    "imperfect_csi_split",
    "awgn",
    "NoiseSpec",
    "noise_from_bandwidth",
    "CSI_MODES",
    "FADING_MODELS",
    "draw_link_gains",
    "draw_noise",
]

CSI_MODES = ("paper", "variance")
FADING_MODELS = ("rayleigh", "nakagami", "none")


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("stream keys must be non-negative")
        return int(part)
    return zlib.crc32(str(part).encode())


def stream(seed: int, *names) -> np.random.Generator:
    """Independent generator for ``(seed, *names)``.

    Names may be ints or strings, e.g. ``stream(7, "fading", snr_idx, chunk)``.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(n) for n in names))
    return np.random.Generator(np.random.Philox(ss))


def cn(rng: np.random.Generator, size=None, variance: float = 1.0):
    """Circularly-symmetric complex normal draws with the given variance."""
    s = math.sqrt(variance / 2)
    return s * rng.standard_normal(size) + 1j * s * rng.standard_normal(size)


def _path_amplitude(distance, exponent) -> float:
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance}")
    # attenuation d^-exponent on power
    return math.sqrt(float(distance) ** (-float(exponent)))


def rayleigh_gain(distance, exponent, rng, size=None):
    """``sqrt(d^-exponent) * h`` with ``h ~ CN(0, 1)``."""
    return _path_amplitude(distance, exponent) * cn(rng, size)


def nakagami_gain(distance, exponent, m_shape, rng, size=None):
    """Nakagami-m envelope with ``Omega = d^-exponent`` and uniform phase."""
    if not m_shape >= 0.5:
        raise ValueError(f"Nakagami shape must be >= 0.5, got {m_shape}")
    omega = _path_amplitude(distance, exponent) ** 2
    power = rng.gamma(m_shape, omega / m_shape, size)
    phase = rng.uniform(0.0, 2 * np.pi, size)
    return np.sqrt(power) * np.exp(1j * phase)


@dataclass(frozen=True)
class ChannelRealization:
    g: np.ndarray | complex
    g_hat: np.ndarray | complex
    g_tilde: np.ndarray | complex
    distance: float
    exponent: float
    sigma_E2: float


def imperfect_csi_split(
    distance, exponent, sigma_E2, rng, size=None, mode: str = "paper"
) -> ChannelRealization:
    """Draw the estimated and error parts of a gain independently.

    ``mode="paper"`` scales the standard deviations by ``1 - sigma_E2`` and
    ``sigma_E2``; ``mode="variance"`` uses ``sqrt(1 - sigma_E2)`` and
    ``sqrt(sigma_E2)`` so that the two parts have variances ``1 - sigma_E2``
    and ``sigma_E2`` before the ``CN(0,1)/sqrt(2)`` draw.
    """
    s2 = check_unit_interval(sigma_E2, "sigma_E2")
    if mode == "paper":
        a_hat, a_tilde = 1.0 - s2, s2
    elif mode == "variance":
        a_hat, a_tilde = math.sqrt(1.0 - s2), math.sqrt(s2)
    else:
        raise ValueError(f"unknown CSI mode {mode!r}; expected one of {CSI_MODES}")
    amp = _path_amplitude(distance, exponent) / math.sqrt(2)
    # both parts are always drawn so the stream layout does not depend on sigma_E2
    h_hat = cn(rng, size)
    h_tilde = cn(rng, size)
    g_hat = a_hat * amp * h_hat
    g_tilde = a_tilde * amp * h_tilde
    return ChannelRealization(g_hat + g_tilde, g_hat, g_tilde, float(distance),
                              float(exponent), s2)


def awgn(samples, N0_linear, rng):
    """Add i.i.d. ``CN(0, N0_linear)`` noise."""
    if N0_linear < 0:
        raise ValueError(f"noise variance must be >= 0, got {N0_linear}")
    x = np.asarray(samples, dtype=complex)
    if N0_linear == 0:
        return x.copy()
    return x + cn(rng, x.shape, N0_linear)


@dataclass(frozen=True)
class NoiseSpec:
    bandwidth_Hz: float
    N0_dBm: float
    N0_linear: float


def noise_from_bandwidth(B_Hz) -> NoiseSpec:
    """Thermal noise floor ``-174 dBm/Hz + 10 log10(B)``."""
    B = check_positive(B_Hz, "bandwidth")
    dbm = -174.0 + 10.0 * math.log10(B)
    return NoiseSpec(B, dbm, 10.0 ** ((dbm - 30.0) / 10.0))


def draw_link_gains(
    rng,
    n_uses: int,
    distances,
    exponent: float,
    fading: str = "rayleigh",
    m_shape: float = 1.0,
    csi_mode: str | None = None,
    sigma_E2: float = 0.0,
):
    """True and receiver-side gains, shape ``(n_uses, K)``.

    Draws are laid out use by use, so the first ``n`` uses are identical
    whatever the total requested.  Schemes that need different numbers of
    channel uses per bit therefore still see common channels on the
    overlap.  ``csi_mode=None`` means perfect CSI.
    """
    d = np.asarray(distances, float)
    K = d.size
    amp = np.array([_path_amplitude(x, exponent) for x in d])
    if fading == "none":
        g = np.broadcast_to(amp.astype(complex), (n_uses, K)).copy()
        return g, g
    if fading == "rayleigh":
        z = rng.standard_normal((n_uses, K, 4)) / math.sqrt(2)
        h_main = z[..., 0] + 1j * z[..., 1]
        h_err = z[..., 2] + 1j * z[..., 3]
    elif fading == "nakagami":
        if not m_shape >= 0.5:
            raise ValueError(f"Nakagami shape must be >= 0.5, got {m_shape}")
        u = rng.random((n_uses, K, 2))
        power = gamma_dist.ppf(u[..., 0], m_shape, scale=1.0 / m_shape)
        h_main = np.sqrt(power) * np.exp(2j * np.pi * u[..., 1])
        h_err = None
    else:
        raise ValueError(f"unknown fading model {fading!r}; expected one of {FADING_MODELS}")
    if csi_mode is None:
        g = amp * h_main
        return g, g
    if h_err is None:
        raise ValueError("imperfect CSI is defined for Rayleigh fading only")
    s2 = check_unit_interval(sigma_E2, "sigma_E2")
    if csi_mode == "paper":
        a_hat, a_tilde = 1.0 - s2, s2
    elif csi_mode == "variance":
        a_hat, a_tilde = math.sqrt(1.0 - s2), math.sqrt(s2)
    else:
        raise ValueError(f"unknown CSI mode {csi_mode!r}; expected one of {CSI_MODES}")
    scale = amp / math.sqrt(2)
    g_hat = a_hat * scale * h_main
    return g_hat + a_tilde * scale * h_err, g_hat


def draw_noise(rng, shape, N0_linear: float):
    """``CN(0, N0)`` samples with a prefix-stable layout."""
    z = rng.standard_normal((*shape, 2)) * math.sqrt(N0_linear / 2)
    return z[..., 0] + 1j * z[..., 1]
