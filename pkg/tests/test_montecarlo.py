import json
import math

import numpy as np
import pytest
from scipy.stats import norm

from hnoma.montecarlo import (
    BerCurve,
    BerPoint,
    ConfigError,
    NotBracketedError,
    ScenarioConfig,
    compare_schemes,
    confidence_interval,
    run_scenario,
    snr_at_ber,
    snr_gap,
    write_csv,
    write_json,
)

SMALL = dict(min_errors=50, max_bits=20_000, chunk_uses=2048)


def test_config_lists_every_violation():
    with pytest.raises(ConfigError) as exc:
        ScenarioConfig(scheme="x", distances=(1, 2), alphas=(0.3, 0.7), snr_grid_db=())
    msg = str(exc.value)
    for part in ("scheme", "farthest", "alphas", "snr_grid_db"):
        assert part in msg


def test_config_rejects_non_power_of_two_hnoma():
    with pytest.raises(ConfigError, match="power-of-two"):
        ScenarioConfig(scheme="hnoma", distances=(3, 2, 1), alphas=(0.5, 0.3, 0.2))


def test_scheme_aliases():
    assert ScenarioConfig(scheme="H-NOMA").scheme == "hnoma"
    assert ScenarioConfig(scheme="Usman-NOMA").scheme == "usman"


@pytest.mark.parametrize("scheme,d,a", [
    ("tnoma", (2.0, 1.0), (0.7, 0.3)),
    ("hnoma", (2.0, 1.0), (0.7, 0.3)),
    ("usman", (2.0, 1.0), (0.85, 0.15)),
    ("tnoma", (4, 3, 2, 1), (0.75, 0.18, 0.05, 0.02)),
    ("hnoma", (4, 3, 2, 1), (0.4, 0.3, 0.2, 0.1)),
])
def test_noiseless_zero_ber(scheme, d, a):
    cfg = ScenarioConfig(scheme=scheme, distances=d, alphas=a, noiseless=True,
                         snr_grid_db=(10.0,), **SMALL)
    c = run_scenario(cfg)
    assert all(p.bit_errors == 0 and p.bits > 0 for u in c.users for p in u)


def test_determinism_across_workers():
    cfg = ScenarioConfig(scheme="hnoma", snr_grid_db=(0.0, 10.0, 20.0), seed=4, **SMALL)
    assert run_scenario(cfg, 1) == run_scenario(cfg, 3)


def test_stop_rule_hits_max_bits():
    cfg = ScenarioConfig(snr_grid_db=(80.0,), min_errors=10**6, max_bits=10_000, chunk_uses=1024)
    p = run_scenario(cfg).users[0][0]
    assert p.bits >= 10_000 and p.bits < 10_000 + 2 * 1024 * 2


def test_self_comparison_has_zero_delta():
    cfg = ScenarioConfig(snr_grid_db=(10.0, 20.0), **SMALL)
    cmp = compare_schemes(cfg, ["tnoma", "tnoma"])
    assert set(cmp.curves) == {"tnoma", "tnoma#2"}
    assert np.all(cmp.deltas["tnoma#2"] == 0)


def test_compare_rejects_channel_overrides():
    cfg = ScenarioConfig(snr_grid_db=(10.0,), **SMALL)
    with pytest.raises(ValueError):
        compare_schemes(cfg, ["tnoma", "hnoma"], overrides={"hnoma": {"seed": 3}})
    with pytest.raises(ValueError):
        compare_schemes(cfg, [])


def test_snr_at_ber_examples():
    assert snr_at_ber([0, 10], [1e-2, 1e-4], 1e-3) == pytest.approx(5.0)
    with pytest.raises(NotBracketedError):
        snr_at_ber([0, 10], [1e-2, 1e-4], 0.5)
    with pytest.raises(NotBracketedError):
        snr_at_ber([0, 10], [1e-2, 1e-4], 1e-6)


def _curve(name, bers, bits=10**6):
    return BerCurve(name, [[BerPoint(s, int(b * bits), bits) for s, b in zip((0, 10, 20), bers)]])


def test_snr_gap_kinds():
    ref = _curve("a", [0.3, 0.2, 0.15])
    oth = _curve("b", [0.3, 0.01, 0.001])
    g = snr_gap(ref, oth, 0, 0.1)
    assert g["kind"] == "lower_bound" and g["gap_db"] > 0
    g = snr_gap(oth, oth, 0, 0.01)
    assert g["kind"] == "exact" and g["gap_db"] == 0


def test_confidence_interval_switches_method():
    lo, hi = confidence_interval(5, 1000)
    assert lo < 0.005 < hi and lo > 0
    lo2, hi2 = confidence_interval(500, 100_000)
    half = 1.959963984540054 * math.sqrt(0.005 * 0.995 / 100_000)
    assert (lo2, hi2) == pytest.approx((0.005 - half, 0.005 + half))
    assert confidence_interval(0, 100)[0] == 0.0


def test_bpsk_control_coverage_over_seeds():
    # the reported 95% interval should cover the known BER for >= 93 of 100 seeds
    exact = norm.sf(math.sqrt(2 * 10 ** 0.4))
    hits = 0
    for seed in range(100):
        cfg = ScenarioConfig(scheme="bpsk_awgn", distances=(1.0,), alphas=(1.0,),
                             fading="none", exponent=0.0, snr_grid_db=(4.0,), seed=seed,
                             min_errors=200, chunk_uses=4096)
        lo, hi = run_scenario(cfg).users[0][0].ci95
        hits += lo <= exact <= hi
    assert hits >= 93


def test_csv_and_json_schema(tmp_path):
    cfg = ScenarioConfig(snr_grid_db=(10.0, 20.0), **SMALL)
    c = run_scenario(cfg)
    write_csv(tmp_path / "a.csv", [c])
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "scheme,user,snr_db,bits,errors,ber,ci_low,ci_high"
    assert len(lines) == 1 + 2 * 2
    write_json(tmp_path / "a.json", [c], cfg.to_dict(), cfg.seed)
    doc = json.loads((tmp_path / "a.json").read_text())
    assert doc["seed"] == cfg.seed and len(doc["results"]) == 4
    assert doc["config"]["alphas"] == [0.7, 0.3]


def test_curves_nonincreasing_within_ci():
    cfg = ScenarioConfig(snr_grid_db=tuple(range(0, 41, 8)), seed=2, min_errors=100,
                         chunk_uses=4096)
    c = run_scenario(cfg)
    for u in c.users:
        for a, b in zip(u, u[1:]):
            assert b.ci95[0] <= a.ci95[1]
