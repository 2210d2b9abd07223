"""Structured-text run configuration.

Files use INI syntax with a fixed set of sections and keys; anything else
is rejected.  Lists are comma separated; an SNR grid may also be written
``start:stop:step`` (stop inclusive).  Example::

    [scenario]
    scheme = tnoma
    distances = 6.015, 1
    exponent = 2
    alphas = 0.7, 0.3

    [sweep]
    snr_grid_db = 0:52:4
    seed = 1

Bundled scenarios are addressed by bare name, e.g. ``two_user_paper``.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .montecarlo import ConfigError, ScenarioConfig

__all__ = [
    "SCHEMA",
    "RunConfig",
    "load_config",
    "parse_config_text",
    "bundled_configs",
    "resolve_config_path",
]


def _float_list(s: str) -> tuple:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _grid(s: str) -> tuple:
    s = s.strip()
    if ":" in s:
        parts = [float(x) for x in s.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError("grid range must be start:stop:step with step > 0")
        start, stop, step = parts
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(max(n, 0)))
    return _float_list(s)


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _str_list(s: str) -> tuple:
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _int(s: str) -> int:
    return int(float(s)) if "e" in s.lower() else int(s)


# section -> key -> (parser, destination)
SCHEMA = {
    "scenario": {
        "scheme": (str.strip, "scheme"),
        "distances": (_float_list, "distances"),
        "exponent": (float, "exponent"),
        "alphas": (_float_list, "alphas"),
        "modulation": (int, "modulation"),
    },
    "channel": {
        "fading": (str.strip, "fading"),
        "nakagami_m": (float, "nakagami_m"),
        "bandwidth_hz": (float, "bandwidth_Hz"),
        "csi": (str.strip, "csi"),
        "sigma_e2": (float, "sigma_E2"),
        "noiseless": (_bool, "noiseless"),
    },
    "sic": {
        "rho": (float, "sic_rho"),
        "detector": (str.strip, "detector"),
    },
    "sweep": {
        "snr_grid_db": (_grid, "snr_grid_db"),
        "seed": (int, "seed"),
        "min_errors": (_int, "min_errors"),
        "max_bits": (_int, "max_bits"),
        "chunk_uses": (_int, "chunk_uses"),
    },
    "compare": {
        "schemes": (_str_list, "compare_schemes"),
        "targets": (_float_list, "compare_targets"),
    },
    "analytic": {
        "m1": (int, "M1"),
        "m2": (int, "M2"),
        "pc_variant": (str.strip, "pc_variant"),
    },
    "image": {
        "far": (str.strip, "image_far"),
        "near": (str.strip, "image_near"),
        "size": (int, "image_size"),
    },
}

REQUIRED = {("scenario", "distances"), ("scenario", "alphas"), ("sweep", "snr_grid_db")}


@dataclass
class RunConfig:
    scenario: ScenarioConfig
    compare_schemes: tuple = ()
    compare_targets: tuple = (1e-3,)
    M1: int = 4
    M2: int = 4
    pc_variant: str = "half"
    image_far: str = "synthetic:noise:1"
    image_near: str = "synthetic:rings:0"
    image_size: int = 512
    source: str = "<text>"
    echo: dict = field(default_factory=dict)


def bundled_configs() -> list[str]:
    root = resources.files("hnoma") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def resolve_config_path(name_or_path: str) -> str:
    if os.path.exists(name_or_path):
        return name_or_path
    root = resources.files("hnoma") / "configs"
    cand = root / (name_or_path if name_or_path.endswith(".cfg") else name_or_path + ".cfg")
    if cand.is_file():
        return str(cand)
    raise ConfigError(
        f"config {name_or_path!r} is neither a file nor a bundled scenario "
        f"({', '.join(bundled_configs())})"
    )


def _apply_override(cp: configparser.ConfigParser, item: str):
    if "=" not in item or "." not in item.split("=", 1)[0]:
        raise ConfigError(f"override {item!r} must look like section.key=value")
    lhs, value = item.split("=", 1)
    section, key = lhs.strip().split(".", 1)
    if not cp.has_section(section):
        cp.add_section(section)
    cp.set(section, key.strip(), value.strip())


def parse_config_text(text: str, overrides=(), source: str = "<text>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    for item in overrides:
        _apply_override(cp, item)

    errors = []
    fields = {}
    echo = {}
    for section in cp.sections():
        if section not in SCHEMA:
            errors.append(f"unknown section [{section}]")
            continue
        for key, raw in cp.items(section):
            spec = SCHEMA[section].get(key)
            if spec is None:
                errors.append(f"unknown key {section}.{key}")
                continue
            parser, dest = spec
            try:
                fields[dest] = parser(raw)
            except ValueError as exc:
                errors.append(f"{section}.{key}: cannot parse {raw!r} ({exc})")
            echo.setdefault(section, {})[key] = raw
    for section, key in sorted(REQUIRED):
        if not cp.has_option(section, key):
            errors.append(f"missing required key {section}.{key}")
    if errors:
        raise ConfigError(f"{source}: " + "; ".join(errors))

    run_keys = {"compare_schemes", "compare_targets", "M1", "M2", "pc_variant",
                "image_far", "image_near", "image_size"}
    run = {k: fields.pop(k) for k in list(fields) if k in run_keys}
    try:
        scenario = ScenarioConfig(**fields)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return RunConfig(scenario=scenario, source=source, echo=echo, **run)


def load_config(name_or_path: str, overrides=()) -> RunConfig:
    path = resolve_config_path(name_or_path)
    with open(path) as fh:
        return parse_config_text(fh.read(), overrides, source=path)
