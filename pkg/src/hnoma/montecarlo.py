"""Reproducible Monte Carlo BER sweeps.

Every SNR point is simulated in fixed-size chunks.  Chunk ``c`` draws its
bits, channels and noise from ``stream(seed, kind, c)``, so a chunk's
outcome does not depend on which process ran it.  Chunks are evaluated in
fixed-size rounds and folded in chunk order; the stopping rule is checked
after every chunk, so surplus chunks of the last round are discarded and
the totals are identical for any worker count.

Fading, CSI error and noise streams do not depend on the scheme, and draws
are laid out use by use.  Two schemes run from the same config therefore
share every channel realization they both use (common random numbers).
The SNR axis is transmit SNR ``Ps / N0``.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta

from .channel import FADING_MODELS, draw_link_gains, draw_noise, noise_from_bandwidth, stream
from .modem import bits_to_labels, build_square_qam, demap, labels_to_bits
from .noma import (
    DETECTORS,
    PowerProfile,
    build_hnoma_codebook,
    hnoma_receive,
    hnoma_transmit,
    tnoma_sic_receive,
    tnoma_transmit,
    usman_chip_alphabet,
    usman_noma_receive,
    usman_noma_transmit,
)

__all__ = [
    "SCHEMES",
    "ScenarioConfig",
    "ConfigError",
    "NotBracketedError",
    "BerPoint",
    "BerCurve",
    "run_scenario",
    "compare_schemes",
    "Comparison",
    "snr_at_ber",
    "snr_gap",
    "confidence_interval",
    "simulate_link",
    "write_csv",
    "write_json",
]

SCHEMES = ("tnoma", "hnoma", "usman", "bpsk_awgn")
SCHEME_ALIASES = {
    "t-noma": "tnoma", "tnoma": "tnoma",
    "h-noma": "hnoma", "hnoma": "hnoma",
    "usman-noma": "usman", "usman": "usman",
    "bpsk_awgn": "bpsk_awgn", "bpsk": "bpsk_awgn",
}
CSI_CHOICES = ("perfect", "paper", "variance")
# chunks evaluated per round; fixed so results do not depend on workers
ROUND = 8


class ConfigError(ValueError):
    """Invalid scenario; the message lists every violated constraint."""


class NotBracketedError(ValueError):
    """The target BER is not crossed between two grid points."""


@dataclass(frozen=True)
class ScenarioConfig:
    scheme: str = "tnoma"
    distances: tuple = (6.015, 1.0)
    exponent: float = 2.0
    alphas: tuple = (0.7, 0.3)
    modulation: int = 4
    csi: str = "perfect"
    sigma_E2: float = 0.0
    sic_rho: float = 0.0
    detector: str = "joint"
    fading: str = "rayleigh"
    nakagami_m: float = 1.0
    bandwidth_Hz: float = 1e6
    snr_grid_db: tuple = (0.0,)
    seed: int = 0
    min_errors: int = 200
    max_bits: int = 10**8
    chunk_uses: int = 2**14
    noiseless: bool = False

    def __post_init__(self):
        errors = []
        scheme = SCHEME_ALIASES.get(str(self.scheme).lower())
        if scheme is None:
            errors.append(f"scheme {self.scheme!r} is not one of {SCHEMES}")
        else:
            object.__setattr__(self, "scheme", scheme)
        d = tuple(float(x) for x in np.atleast_1d(self.distances))
        a = tuple(float(x) for x in np.atleast_1d(self.alphas))
        g = tuple(float(x) for x in np.atleast_1d(self.snr_grid_db))
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "snr_grid_db", g)
        if any(x <= 0 for x in d):
            errors.append("distances must be positive")
        if list(d) != sorted(d, reverse=True):
            errors.append("distances must be sorted so that user 1 is farthest")
        if len(a) != len(d):
            errors.append(f"{len(a)} alphas given for {len(d)} users")
        try:
            PowerProfile(1.0, a)
        except ValueError as exc:
            errors.append(f"alphas: {exc}")
        if scheme in ("hnoma", "usman"):
            n = len(d)
            if n < 2 or n & (n - 1):
                errors.append(f"{scheme} needs a power-of-two user count >= 2, got {n}")
        if scheme == "bpsk_awgn" and len(d) != 1:
            errors.append("bpsk_awgn is a single-user control")
        if self.modulation not in (4, 16, 64):
            errors.append(f"modulation must be square QAM 4/16/64, got {self.modulation}")
        if self.csi not in CSI_CHOICES:
            errors.append(f"csi must be one of {CSI_CHOICES}")
        if not 0.0 <= self.sigma_E2 <= 1.0:
            errors.append("sigma_E2 must lie in [0, 1]")
        if not 0.0 <= self.sic_rho <= 1.0:
            errors.append("sic_rho must lie in [0, 1]")
        if self.detector not in DETECTORS:
            errors.append(f"detector must be one of {DETECTORS}")
        if self.fading not in FADING_MODELS:
            errors.append(f"fading must be one of {FADING_MODELS}")
        if self.fading == "nakagami" and self.nakagami_m < 0.5:
            errors.append("nakagami_m must be >= 0.5")
        if self.csi != "perfect" and self.fading != "rayleigh":
            errors.append("imperfect CSI requires Rayleigh fading")
        if not self.bandwidth_Hz > 0:
            errors.append("bandwidth_Hz must be positive")
        if len(g) == 0:
            errors.append("snr_grid_db must be non-empty")
        if self.min_errors < 1:
            errors.append("min_errors must be >= 1")
        if self.max_bits < 1:
            errors.append("max_bits must be >= 1")
        if self.chunk_uses < 1:
            errors.append("chunk_uses must be >= 1")
        if self.seed < 0:
            errors.append("seed must be non-negative")
        if errors:
            raise ConfigError("invalid scenario: " + "; ".join(errors))

    @property
    def n_users(self) -> int:
        return len(self.distances)

    @property
    def N0(self) -> float:
        return noise_from_bandwidth(self.bandwidth_Hz).N0_linear

    def replace(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# --------------------------------------------------------------- statistics


def confidence_interval(errors: int, bits: int, level: float = 0.95) -> tuple[float, float]:
    """Normal-approximation interval, exact Clopper-Pearson below 30 errors."""
    if bits <= 0:
        return 0.0, 1.0
    p = errors / bits
    a = 1.0 - level
    if errors < 30:
        lo = 0.0 if errors == 0 else float(beta.ppf(a / 2, errors, bits - errors + 1))
        hi = 1.0 if errors == bits else float(beta.ppf(1 - a / 2, errors + 1, bits - errors))
        return lo, hi
    z = 1.959963984540054
    half = z * math.sqrt(p * (1 - p) / bits)
    return max(0.0, p - half), min(1.0, p + half)


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    bit_errors: int
    bits: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else float("nan")

    @property
    def std_error(self) -> float:
        p = self.ber
        return math.sqrt(p * (1 - p) / self.bits) if self.bits else float("nan")

    @property
    def ci95(self) -> tuple[float, float]:
        return confidence_interval(self.bit_errors, self.bits)


@dataclass
class BerCurve:
    scheme: str
    users: list = field(default_factory=list)  # users[k] is a list of BerPoint

    def snr_db(self, user: int = 0) -> np.ndarray:
        return np.array([p.snr_db for p in self.users[user]])

    def ber(self, user: int = 0) -> np.ndarray:
        return np.array([p.ber for p in self.users[user]])

    def rows(self):
        for k, pts in enumerate(self.users):
            for p in pts:
                lo, hi = p.ci95
                yield {
                    "scheme": self.scheme, "user": k + 1, "snr_db": p.snr_db,
                    "bits": p.bits, "errors": p.bit_errors, "ber": p.ber,
                    "ci_low": lo, "ci_high": hi,
                }

    def __eq__(self, other):
        return (isinstance(other, BerCurve) and self.scheme == other.scheme
                and self.users == other.users)


# --------------------------------------------------------------- link model


def _bits_per_use(cfg: ScenarioConfig) -> int:
    return 1 if cfg.scheme in ("hnoma", "bpsk_awgn") else int(math.log2(cfg.modulation))


def _uses_for(cfg: ScenarioConfig, n_bits: int) -> int:
    return -(-n_bits // _bits_per_use(cfg))


class _Link:
    """Per-config constants built once per process."""

    _cache: dict = {}

    def __init__(self, cfg: ScenarioConfig):
        self.qam = build_square_qam(cfg.modulation)
        self.codebook = build_hnoma_codebook(cfg.n_users) if cfg.scheme == "hnoma" else None
        self.chips = (usman_chip_alphabet(self.qam, cfg.n_users)
                      if cfg.scheme == "usman" else None)

    @classmethod
    def get(cls, cfg):
        key = (cfg.scheme, cfg.modulation, cfg.n_users)
        if key not in cls._cache:
            cls._cache[key] = cls(cfg)
        return cls._cache[key]


def simulate_link(cfg: ScenarioConfig, snr_db: float, user_bits, rng_fading, rng_noise):
    """Send ``user_bits`` (``K x n_bits``) through the link; return decisions.

    Receiver ``k`` decodes user ``k`` from its own observation.  Bits are
    zero-padded to whole symbols or blocks and the padding is dropped from
    the output.
    """
    bits = np.asarray(user_bits, np.int8)
    K = cfg.n_users
    if bits.ndim != 2 or bits.shape[0] != K:
        raise ValueError(f"user_bits must have shape ({K}, n), got {bits.shape}")
    n_bits = bits.shape[1]
    link = _Link.get(cfg)
    N0 = cfg.N0
    Ps = 10.0 ** (snr_db / 10.0) * N0
    profile = PowerProfile(Ps, cfg.alphas)
    bps = link.qam.bits_per_symbol

    if cfg.scheme == "usman":
        per_block = bps * K
        n_blocks = -(-n_bits // per_block)
        n_uses = n_blocks * K
    else:
        n_uses = _uses_for(cfg, n_bits)
    padded = np.zeros((K, n_uses * _bits_per_use(cfg)), np.int8)
    padded[:, :n_bits] = bits

    csi = None if cfg.csi == "perfect" else cfg.csi
    g, g_hat = draw_link_gains(rng_fading, n_uses, cfg.distances, cfg.exponent,
                               cfg.fading, cfg.nakagami_m, csi, cfg.sigma_E2)
    noise = (np.zeros((n_uses, K), complex) if cfg.noiseless
             else draw_noise(rng_noise, (n_uses, K), N0))
    out = np.empty((K, padded.shape[1]), np.int8)

    if cfg.scheme == "bpsk_awgn":
        x = math.sqrt(Ps) * (2.0 * padded[0] - 1.0)
        y = g[:, 0] * x + noise[:, 0]
        out[0] = (np.real(np.conj(g_hat[:, 0]) * y) >= 0).astype(np.int8)
    elif cfg.scheme == "tnoma":
        tb = padded.reshape(K, n_uses, bps).transpose(1, 0, 2)
        x = tnoma_transmit(tb, profile, link.qam).samples
        for k in range(K):
            y = g[:, k] * x + noise[:, k]
            lab = tnoma_sic_receive(y, g_hat[:, k], profile, link.qam, k,
                                    residual_rho=cfg.sic_rho)[k]
            out[k] = labels_to_bits(lab, bps).reshape(-1)
    elif cfg.scheme == "hnoma":
        x = hnoma_transmit(padded.T, profile, link.codebook).samples
        for k in range(K):
            y = g[:, k] * x + noise[:, k]
            dec = hnoma_receive(y, g_hat[:, k], profile, link.codebook,
                                detector=cfg.detector, residual_rho=cfg.sic_rho)
            out[k] = dec[:, k]
    else:  # usman
        N = K
        lab = bits_to_labels(padded.reshape(K, n_blocks, N * bps), bps)  # K, nb, N
        sym = link.qam.points[link.qam.index_of(lab)].transpose(1, 0, 2)
        x = usman_noma_transmit(sym, profile, N).samples  # nb, N
        for k in range(K):
            # one gain per spreading block
            gk = np.repeat(g[::N, k, None], N, axis=1)
            ghk = np.repeat(g_hat[::N, k, None], N, axis=1)
            y = gk * x + noise[:, k].reshape(n_blocks, N)
            dec = usman_noma_receive(y, ghk, profile, link.qam, k, link.chips)
            out[k] = labels_to_bits(dec, bps).reshape(-1)
    return out[:, :n_bits]


def _chunk_task(args):
    cfg, snr_db, chunk = args
    n_bits = cfg.chunk_uses * _bits_per_use(cfg)
    if cfg.scheme == "usman":
        n_bits -= n_bits % (cfg.n_users * int(math.log2(cfg.modulation)))
    rng_bits = stream(cfg.seed, "bits", chunk)
    bits = rng_bits.integers(0, 2, (cfg.n_users, n_bits), dtype=np.int8)
    dec = simulate_link(cfg, snr_db, bits,
                        stream(cfg.seed, "fading", chunk), stream(cfg.seed, "noise", chunk))
    return np.count_nonzero(dec != bits, axis=1), n_bits


def _run_point(cfg: ScenarioConfig, snr_db: float, mapper) -> list[BerPoint]:
    K = cfg.n_users
    errors = np.zeros(K, np.int64)
    bits = 0
    chunk = 0
    while True:
        tasks = [(cfg, snr_db, c) for c in range(chunk, chunk + ROUND)]
        done = False
        for e, nb in mapper(_chunk_task, tasks):
            errors += e
            bits += nb
            chunk += 1
            if errors.min() >= cfg.min_errors or bits >= cfg.max_bits:
                done = True
                break
        if done:
            break
    return [BerPoint(snr_db, int(errors[k]), int(bits)) for k in range(K)]


def run_scenario(cfg: ScenarioConfig, workers: int = 1) -> BerCurve:
    """Sweep the SNR grid; one curve holding every user's points."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    curve = BerCurve(cfg.scheme, [[] for _ in range(cfg.n_users)])
    if workers == 1:
        def mapper(fn, tasks):
            return map(fn, tasks)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        mapper = pool.map
    try:
        for snr in cfg.snr_grid_db:
            for k, p in enumerate(_run_point(cfg, snr, mapper)):
                curve.users[k].append(p)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return curve


# --------------------------------------------------------------- comparison


def snr_at_ber(snr_db, ber, target: float) -> float:
    """SNR where the curve first falls through ``target``.

    Interpolates ``log10(BER)`` linearly between the bracketing points.
    Zero-BER points are not interpolated through.
    """
    s = np.asarray(snr_db, float)
    b = np.asarray(ber, float)
    if not 0 < target < 1:
        raise ValueError("target BER must lie in (0, 1)")
    for i in range(len(s) - 1):
        if b[i] >= target > b[i + 1]:
            if b[i + 1] <= 0:
                raise NotBracketedError(
                    f"BER drops to zero between {s[i]} and {s[i + 1]} dB; "
                    "cannot interpolate in log space"
                )
            if b[i] == target:
                return float(s[i])
            t = (math.log10(target) - math.log10(b[i])) / (
                math.log10(b[i + 1]) - math.log10(b[i]))
            return float(s[i] + t * (s[i + 1] - s[i]))
    raise NotBracketedError(
        f"target {target:g} not bracketed (BER range {b.min():.3g}..{b.max():.3g})"
    )


def snr_gap(ref: BerCurve, other: BerCurve, user: int, target: float) -> dict:
    """SNR the reference needs minus what ``other`` needs at ``target``.

    If only ``other`` reaches the target, the gap is reported as a lower
    bound measured from the top of the grid.
    """
    s_ref, b_ref = ref.snr_db(user), ref.ber(user)
    s_oth, b_oth = other.snr_db(user), other.ber(user)
    try:
        x_oth = snr_at_ber(s_oth, b_oth, target)
    except NotBracketedError:
        return {"gap_db": None, "kind": "unbracketed"}
    try:
        x_ref = snr_at_ber(s_ref, b_ref, target)
        return {"gap_db": x_ref - x_oth, "kind": "exact", "ref_db": x_ref, "other_db": x_oth}
    except NotBracketedError:
        if b_ref[-1] > target:
            return {"gap_db": float(s_ref[-1]) - x_oth, "kind": "lower_bound",
                    "ref_db": None, "other_db": x_oth}
        return {"gap_db": None, "kind": "unbracketed"}


@dataclass
class Comparison:
    reference: str
    curves: dict
    deltas: dict  # scheme -> (K, P) array of BER(scheme) - BER(reference)
    gaps: dict  # (scheme, user, target) -> snr_gap dict

    def rows(self):
        for name, c in self.curves.items():
            yield from c.rows()


def compare_schemes(cfg_base: ScenarioConfig, schemes, targets=(1e-3,), workers: int = 1,
                    overrides: dict | None = None) -> Comparison:
    """Run every scheme on the same seed and grid and tabulate the differences.

    ``overrides`` maps a scheme name to extra config fields for that scheme
    (for example a different detector); fields that would change the
    channel model are rejected.
    """
    schemes = list(schemes)
    if not schemes:
        raise ValueError("at least one scheme is required")
    overrides = overrides or {}
    shared = {"distances", "exponent", "csi", "sigma_E2", "fading", "nakagami_m",
              "snr_grid_db", "seed", "bandwidth_Hz"}
    for name, ov in overrides.items():
        bad = shared & set(ov)
        if bad:
            raise ValueError(f"override for {name} changes shared fields {sorted(bad)}")
    curves = {}
    keys = []
    for s in schemes:
        key = s
        i = 2
        while key in curves:
            key = f"{s}#{i}"
            i += 1
        cfg = cfg_base.replace(scheme=s, **overrides.get(s, {}))
        curves[key] = run_scenario(cfg, workers)
        keys.append(key)
    ref = curves[keys[0]]
    deltas, gaps = {}, {}
    for key in keys:
        c = curves[key]
        deltas[key] = np.array([c.ber(k) - ref.ber(k) for k in range(len(ref.users))])
        for k in range(len(ref.users)):
            for t in targets:
                gaps[(key, k + 1, t)] = snr_gap(ref, c, k, t)
    return Comparison(keys[0], curves, deltas, gaps)


# --------------------------------------------------------------- output

CSV_COLUMNS = ("scheme", "user", "snr_db", "bits", "errors", "ber", "ci_low", "ci_high")


def write_csv(path, curves) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for c in curves:
            for row in c.rows():
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def write_json(path, curves, config: dict, seed: int, extra: dict | None = None) -> None:
    doc = {
        "seed": seed,
        "config": config,
        "results": [row for c in curves for row in c.rows()],
    }
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")
