import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from hnoma.analytic import (
    AnalyticConfig,
    d1_coeff,
    q_function,
    rayleigh_q_average,
    user1_average_ber,
    user1_average_ber_closed_form,
    user1_conditional_ber,
    user2_average_ber,
    user2_conditional_ber,
)

DEFAULT = AnalyticConfig()

# exact interval-Gaussian enumeration averaged by quadrature (see oracles.py)
FROZEN_AVERAGE = {
    10: (0.35890086415177636, 0.2021809546594766),
    20: (0.20659267990452682, 0.03859177846828744),
    30: (0.0716127488249217, 0.004323414542217783),
}
FROZEN_CONDITIONAL = {
    3.0: (0.4059624963510789, 0.3086801258013348),
    30.0: (0.24997969119076155, 0.029729449573225108),
    300.0: (0.101367510868223, 1.399862240517533e-07),
}


def test_q_function_values():
    assert q_function(0.0) == 0.5
    assert q_function(1.0) == pytest.approx(0.15865525393145707, rel=1e-14)
    assert q_function(-1.0) == pytest.approx(1 - 0.15865525393145707, rel=1e-14)
    assert q_function(10.0) == pytest.approx(7.619853024160527e-24, rel=1e-10)
    assert 0 < q_function(37.0) < 1e-290


def test_d1_table_entries():
    # sqrt(M1) = 4: k=1 -> 1, 1; k=2 -> 2, 1, -1 (sign flips once i 2^(k-1) reaches 4)
    assert [d1_coeff(1, i, 4) for i in range(2)] == [1, 1]
    assert [d1_coeff(2, i, 4) for i in range(3)] == [2, 1, -1]


@pytest.mark.parametrize("gamma", sorted(FROZEN_CONDITIONAL))
def test_conditional_matches_frozen_enumeration(gamma):
    u1, u2 = FROZEN_CONDITIONAL[gamma]
    assert float(user1_conditional_ber(DEFAULT, gamma)) == pytest.approx(u1, rel=1e-9)
    assert float(user2_conditional_ber(DEFAULT, gamma)) == pytest.approx(u2, rel=1e-7)


@pytest.mark.parametrize("db", sorted(FROZEN_AVERAGE))
def test_average_matches_frozen_enumeration(db):
    u1, u2 = FROZEN_AVERAGE[db]
    gb = 10 ** (db / 10)
    assert user1_average_ber(DEFAULT, gb) == pytest.approx(u1, rel=1e-7)
    assert user2_average_ber(DEFAULT, gb) == pytest.approx(u2, rel=1e-7)


def test_qpsk_user1_reduces_to_two_tail_form():
    a1, a2 = math.sqrt(0.7), math.sqrt(0.3)
    for g in (0.5, 5.0, 50.0):
        gam = g * 6.015 ** -2
        ref = 0.5 * (q_function(math.sqrt(gam) * (a1 + a2)) + q_function(math.sqrt(gam) * (a1 - a2)))
        assert float(user1_conditional_ber(DEFAULT, g)) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("M1,M2,alpha1", [(4, 4, 0.8), (4, 16, 0.8), (16, 4, 0.9), (4, 4, 0.6)])
def test_conditional_matches_live_enumeration(M1, M2, alpha1):
    cfg = AnalyticConfig(M1=M1, M2=M2, alpha1=alpha1)
    for g in (10.0, 1e3):
        o1, o2 = oracles.two_user_conditional_ber(M1, M2, alpha1, 6.015, 1.0, 2.0, g)
        assert float(user1_conditional_ber(cfg, g)) == pytest.approx(o1, rel=1e-9, abs=1e-15)
        assert float(user2_conditional_ber(cfg, g)) == pytest.approx(o2, rel=1e-7, abs=1e-15)


def test_quadrature_agrees_with_sampled_average():
    e = np.random.default_rng(11).exponential(size=10**7)
    for db in (10, 30):
        gb = 10 ** (db / 10)
        mc = float(np.mean(user1_conditional_ber(DEFAULT, gb * e)))
        assert user1_average_ber(DEFAULT, gb) == pytest.approx(mc, rel=0.005)


def test_quadrature_agrees_with_closed_form():
    for db in (0, 15, 35, 60):
        gb = 10 ** (db / 10)
        assert user1_average_ber(DEFAULT, gb) == pytest.approx(
            user1_average_ber_closed_form(DEFAULT, gb), rel=1e-7)


def test_pc_variants_differ_by_half():
    half = AnalyticConfig(pc_variant="half")
    full = AnalyticConfig(pc_variant="paper")
    assert user2_average_ber(full, 100.0) == pytest.approx(2 * user2_average_ber(half, 100.0))


def test_rayleigh_q_average_limits():
    assert rayleigh_q_average(0.0) == 0.5
    assert rayleigh_q_average(1e12) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(0.55, 0.95), st.floats(-5.0, 45.0))
def test_bers_are_probabilities(alpha1, db):
    cfg = AnalyticConfig(alpha1=alpha1)
    gb = 10 ** (db / 10)
    for v in (user1_average_ber(cfg, gb), user2_average_ber(cfg, gb)):
        assert 0.0 <= v <= 0.5 + 1e-12


def test_monotone_in_snr():
    grid = [10 ** (d / 10) for d in range(0, 60, 5)]
    u1 = [user1_average_ber(DEFAULT, g) for g in grid]
    u2 = [user2_average_ber(DEFAULT, g) for g in grid]
    assert all(np.diff(u1) < 0) and all(np.diff(u2) < 0)


@pytest.mark.parametrize("kw", [{"M1": 8}, {"alpha1": 0.4}, {"q1": 0.0}, {"pc_variant": "x"},
                                {"snr_grid_db": ()}])
def test_invalid_config(kw):
    with pytest.raises(ValueError):
        AnalyticConfig(**kw)


def test_bad_bit_position():
    with pytest.raises(ValueError):
        user1_conditional_ber(DEFAULT, 1.0, k=2)
