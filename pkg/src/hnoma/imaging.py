"""Grayscale image transport over the NOMA links.

Images travel as raw 8-bit pixels, MSB first, with no source or channel
coding, so every bit error lands directly in the reconstruction.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

import numpy as np

from .channel import stream
from .montecarlo import ScenarioConfig, simulate_link

__all__ = [
    "GrayImage",
    "PgmError",
    "read_pgm",
    "write_pgm",
    "parse_pgm",
    "encode_pgm",
    "image_to_bits",
    "bits_to_image",
    "mse",
    "psnr",
    "synthetic_image",
    "SYNTHETIC_KINDS",
    "transmit_image_pair",
    "psnr_report",
]

SYNTHETIC_KINDS = ("gradient", "checkerboard", "noise", "rings")


class PgmError(ValueError):
    """Malformed or unsupported PGM data; ``offset`` is the failing byte."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


@dataclass(frozen=True)
class GrayImage:
    width: int
    height: int
    pixels: np.ndarray  # uint8, shape (height, width)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        px = np.asarray(self.pixels)
        if px.size != self.width * self.height:
            raise ValueError(
                f"{px.size} pixels do not fill a {self.width}x{self.height} image"
            )
        if px.dtype != np.uint8:
            if px.size and (px.min() < 0 or px.max() > 255):
                raise ValueError("pixel values must lie in 0..255")
            px = px.astype(np.uint8)
        px = px.reshape(self.height, self.width).copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, arr) -> "GrayImage":
        a = np.asarray(arr)
        if a.ndim != 2:
            raise ValueError("expected a 2-D pixel array")
        return cls(a.shape[1], a.shape[0], a)


# ---------------------------------------------------------------- PGM I/O

_TOKEN = re.compile(rb"\S+")


def _header_tokens(data: bytes, count: int):
    """First ``count`` whitespace-separated tokens, skipping ``#`` comments."""
    pos = 0
    out = []
    while len(out) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise PgmError("header ended early", pos)
        if data[pos:pos + 1] == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
            continue
        m = _TOKEN.match(data, pos)
        tok = m.group()
        hash_at = tok.find(b"#")
        if hash_at > 0:
            tok = tok[:hash_at]
        out.append((tok, pos))
        pos += len(tok)
    return out, pos


def parse_pgm(data: bytes) -> GrayImage:
    if data[:2] != b"P5":
        kind = data[:2].decode("ascii", "replace")
        raise PgmError(f"unsupported format {kind!r}; only binary P5 is accepted", 0)
    toks, pos = _header_tokens(data, 4)
    vals = []
    for tok, off in toks[1:]:
        if not tok.isdigit():
            raise PgmError(f"expected a decimal integer, found {tok[:16]!r}", off)
        vals.append(int(tok))
    w, h, maxval = vals
    if w < 1 or h < 1:
        raise PgmError("image dimensions must be positive", toks[1][1])
    if maxval != 255:
        raise PgmError(f"maxval must be 255, got {maxval}", toks[3][1])
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise PgmError("missing whitespace after maxval", pos)
    start = pos + 1
    need = w * h
    payload = data[start:start + need]
    if len(payload) < need:
        raise PgmError(
            f"payload truncated: expected {need} bytes, found {len(payload)}",
            start + len(payload),
        )
    return GrayImage(w, h, np.frombuffer(payload, dtype=np.uint8))


def encode_pgm(img: GrayImage) -> bytes:
    return b"P5\n%d %d\n255\n" % (img.width, img.height) + img.pixels.tobytes()


def read_pgm(path) -> GrayImage:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def write_pgm(img: GrayImage, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(img))


# ---------------------------------------------------------------- bits


def image_to_bits(img: GrayImage) -> np.ndarray:
    return np.unpackbits(img.pixels.reshape(-1)).astype(np.int8)


def bits_to_image(bits, width: int, height: int) -> GrayImage:
    b = np.asarray(bits)
    if b.ndim != 1 or b.size != 8 * width * height:
        raise ValueError(
            f"need {8 * width * height} bits for a {width}x{height} image, got {b.size}"
        )
    return GrayImage(width, height, np.packbits(b.astype(np.uint8)))


# ---------------------------------------------------------------- metrics


def _check_same(a: GrayImage, b: GrayImage):
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(
            f"image sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def mse(a: GrayImage, b: GrayImage) -> float:
    _check_same(a, b)
    d = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    return float(np.mean(d * d))


def psnr(a: GrayImage, b: GrayImage) -> float:
    """``10 log10(255^2 / MSE)``; identical images give ``inf``."""
    m = mse(a, b)
    if m == 0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / m)


# ---------------------------------------------------------------- synthetic


def synthetic_image(kind: str, size: int = 512, seed: int = 0, beta: float = 2.0,
                    period: int = 32) -> GrayImage:
    """Deterministic test pattern.

    ``noise`` is Gaussian noise shaped to a ``1/f^beta`` power spectrum;
    larger ``beta`` gives smoother images.
    """
    if size < 2:
        raise ValueError("size must be >= 2")
    y, x = np.mgrid[0:size, 0:size].astype(float)
    if kind == "gradient":
        a = 255.0 * (x + y) / (2 * (size - 1))
    elif kind == "checkerboard":
        a = 255.0 * (((x // period) + (y // period)) % 2)
    elif kind == "rings":
        r = np.hypot(x - size / 2, y - size / 2)
        a = 127.5 * (1 + np.cos(2 * np.pi * r / period))
    elif kind == "noise":
        rng = stream(seed, "synthetic", kind)
        f = np.fft.fftfreq(size)
        fr = np.hypot(*np.meshgrid(f, f))
        fr[0, 0] = 1.0
        spec = np.fft.fft2(rng.standard_normal((size, size))) / fr ** (beta / 2)
        spec[0, 0] = 0.0
        a = np.real(np.fft.ifft2(spec))
        a = 255.0 * (a - a.min()) / (a.max() - a.min())
    else:
        raise ValueError(f"unknown pattern {kind!r}; expected one of {SYNTHETIC_KINDS}")
    return GrayImage.from_array(np.clip(np.rint(a), 0, 255).astype(np.uint8))


# ---------------------------------------------------------------- transport


def transmit_image_pair(img_far: GrayImage, img_near: GrayImage, cfg: ScenarioConfig):
    """Send one image per user at the first SNR of ``cfg.snr_grid_db``.

    Returns ``(recon_far, recon_near, (psnr_far, psnr_near))``.  Channel and
    noise draws depend only on the seed, so two schemes run on the same
    config see common random numbers.
    """
    if cfg.n_users != 2:
        raise ValueError(f"image transport needs a two-user scenario, got {cfg.n_users} users")
    _check_same(img_far, img_near)
    bits = np.stack([image_to_bits(img_far), image_to_bits(img_near)])
    dec = simulate_link(cfg, cfg.snr_grid_db[0], bits,
                        stream(cfg.seed, "image", "fading"), stream(cfg.seed, "image", "noise"))
    w, h = img_far.width, img_far.height
    rf, rn = bits_to_image(dec[0], w, h), bits_to_image(dec[1], w, h)
    return rf, rn, (psnr(img_far, rf), psnr(img_near, rn))


def _finite_or_tag(v: float):
    return "inf" if math.isinf(v) else v


def psnr_report(entries) -> str:
    """JSON list of ``{scheme, user, psnr_db, mse}``; ``inf`` marks a perfect copy."""
    rows = [
        {"scheme": s, "user": u, "psnr_db": _finite_or_tag(p), "mse": m}
        for s, u, p, m in entries
    ]
    return json.dumps(rows, indent=2) + "\n"
