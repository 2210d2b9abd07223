import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hnoma.channel import cn, stream
from hnoma.hadamard import inverse_transform
from hnoma.modem import build_square_qam, labels_to_bits
from hnoma.noma import (
    PowerProfile,
    build_hnoma_codebook,
    hnoma_receive,
    hnoma_transmit,
    sic_decode,
    sic_identity_check,
    superpose,
    tnoma_sic_receive,
    tnoma_transmit,
    usman_chip_alphabet,
    usman_noma_receive,
    usman_noma_transmit,
)
from hnoma.hadamard import normalized_hadamard

QPSK = build_square_qam(4)
# power splits under which plain SIC separates every QPSK layer
SEPARABLE = {2: (0.7, 0.3), 4: (0.75, 0.18, 0.05, 0.02)}


def test_profile_invariants():
    with pytest.raises(ValueError):
        PowerProfile(1.0, (1.0, 0.0))
    with pytest.raises(ValueError):
        PowerProfile(1.0, (0.3, 0.7))
    with pytest.raises(ValueError):
        PowerProfile(1.0, (0.6, 0.3))
    with pytest.raises(ValueError):
        PowerProfile(-1.0, (0.7, 0.3))


def test_superpose_example():
    x = superpose([[1.0], [-1.0]], PowerProfile(1.0, (0.7, 0.3)), energies=(1, 1))
    assert x.samples[0] == pytest.approx(math.sqrt(0.7) - math.sqrt(0.3))
    assert x.samples[0].real == pytest.approx(0.2889, abs=1e-4)


def test_superpose_zero_layer_and_mismatch():
    p = PowerProfile(2.0, (0.7, 0.3))
    x = superpose([[1.0, 2.0], [0.0, 0.0]], p)
    assert np.allclose(x.samples, math.sqrt(1.4) * np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        superpose([[1.0, 2.0], [0.0]], p)
    with pytest.raises(ValueError):
        superpose([[1.0], [1.0]], p, energies=(1.0, 0.0))


def test_power_conservation():
    rng = stream(0, "power")
    p = PowerProfile(3.0, (0.5, 0.3, 0.2))
    lab = rng.integers(0, 4, (200_000, 3))
    x = superpose(QPSK.points[lab], p)
    assert np.mean(np.abs(x.samples) ** 2) == pytest.approx(3.0, rel=0.01)


@pytest.mark.parametrize("K", [2, 4])
def test_tnoma_noiseless_exhaustive(K):
    p = PowerProfile(1.0, SEPARABLE[K])
    labs = np.array(list(product(range(4), repeat=K)))
    x = tnoma_transmit(labels_to_bits(labs, 2), p, QPSK).samples
    g = 0.4 - 0.9j
    for k in range(K):
        dec = tnoma_sic_receive(g * x, g, p, QPSK, k)
        for j in range(k + 1):
            assert (dec[j] == labs[:, j]).all()


def test_tnoma_single_layer_is_plain_mld():
    rng = stream(1, "mld")
    y = cn(rng, 500) * 2
    rep = sic_decode(y, 1.0, [1.0], [QPSK])
    d = np.abs(y[:, None] - QPSK.points[None, :])
    assert (rep.decisions[0] == np.argmin(d, 1)).all()


def test_tnoma_zero_gain_rejected():
    p = PowerProfile(1.0, (0.7, 0.3))
    with pytest.raises(ValueError):
        tnoma_sic_receive(np.ones(3), 0.0, p, QPSK, 1)


def test_forced_error_propagates():
    p = PowerProfile(1.0, (0.7, 0.3))
    a = p.amplitudes()
    x = a[0] * QPSK.points[3] + a[1] * QPSK.points[0]
    dec, rep = tnoma_sic_receive(np.array([x]), 1.0, p, QPSK, 1, forced={0: [0]},
                                 return_report=True)
    assert rep.forced == [True, False]
    resid = x - a[0] * QPSK.points[0]
    expect = np.argmin(np.abs(resid - a[1] * QPSK.points))
    assert dec[0][0] == 0 and dec[1][0] == expect
    assert np.allclose(rep.residuals[0], resid)


def test_residual_rho_leaves_interference():
    p = PowerProfile(1.0, (0.7, 0.3))
    a = p.amplitudes()
    x = np.array([a[0] * QPSK.points[3] + a[1] * QPSK.points[1]])
    rep = sic_decode(x, 1.0, a, [QPSK, QPSK], residual_rho=0.25)
    assert np.allclose(rep.residuals[0], x - 0.5 * a[0] * QPSK.points[3])


@settings(max_examples=30, deadline=None)
@given(st.permutations([0, 1, 2]), st.integers(0, 2**31 - 1))
def test_decoding_order_invariant(perm, seed):
    rng = np.random.default_rng(seed)
    amps = np.array([0.8, 0.5, 0.2])
    y = cn(rng, 50)
    base = sic_decode(y, 1.0, amps, [QPSK] * 3)
    perm = list(perm)
    shuffled = sic_decode(y, 1.0, amps[perm], [QPSK] * 3)
    assert shuffled.order == [perm.index(j) for j in base.order]
    for j in range(3):
        assert (shuffled.decision_for(perm.index(j)) == base.decision_for(j)).all()


def test_hnoma_codebook_layers():
    cb = build_hnoma_codebook(4)
    assert cb.layers[0].labels.tolist() == [2, 3, 4, 5, 6]
    assert cb.layers[1].labels.tolist() == [0, 1, 2, 3, 4]
    for k, c in enumerate(cb.layers):
        assert c.avg_energy == pytest.approx(1.0)
        assert np.allclose(c.points.real if k % 2 else c.points.imag, 0)


def test_hnoma_noiseless_single_block():
    p = PowerProfile(1.0, (0.7, 0.3))
    cb = build_hnoma_codebook(2)
    x = hnoma_transmit([[1, 0]], p, cb).samples
    for det in ("joint", "sic"):
        assert hnoma_receive(x, 1.0, p, cb, det).tolist() == [[1, 0]]


@pytest.mark.parametrize("N,alphas", [(2, (0.7, 0.3)), (4, (0.4, 0.3, 0.2, 0.1)),
                                      (4, (0.75, 0.18, 0.05, 0.02))])
def test_hnoma_noiseless_exhaustive(N, alphas):
    p = PowerProfile(5.0, alphas)
    cb = build_hnoma_codebook(N)
    d = np.array(list(product((0, 1), repeat=N)))
    g = -0.3 + 0.2j
    y = g * hnoma_transmit(d, p, cb).samples
    assert (hnoma_receive(y, g, p, cb, "joint") == d).all()


def test_hnoma_sic_noiseless_when_layers_separate():
    p = PowerProfile(1.0, (0.9, 0.09, 0.009, 0.001))
    cb = build_hnoma_codebook(4)
    d = np.array(list(product((0, 1), repeat=4)))
    y = hnoma_transmit(d, p, cb).samples
    assert (hnoma_receive(y, 1.0, p, cb, "sic") == d).all()


@pytest.mark.parametrize("forced,expected", [(1, [1, 0]), (3, [1, 1])])
def test_hnoma_forced_layer_error_follows_inverse_transform(forced, expected):
    # d = [1, 0] gives w = [1, 1], shifted [2, 2].  Forcing the first layer
    # to 1 gives w_hat = [0, 1] and (1/2) H w_hat = [0.5, -0.5] -> [1, 0]
    # (the tie slices to 1); forcing 3 gives w_hat = [2, 1] -> [1.5, 0.5]
    # -> [1, 1].
    p = PowerProfile(1.0, (0.7, 0.3))
    cb = build_hnoma_codebook(2)
    x = hnoma_transmit([[1, 0]], p, cb).samples
    bits, rep = hnoma_receive(x, 1.0, p, cb, "sic", forced={0: [forced]},
                              return_report=True)
    assert rep.decision_for(1)[0] == 2
    w_hat = np.array([[rep.decision_for(0)[0], rep.decision_for(1)[0]]])
    assert bits.tolist() == inverse_transform(w_hat, cb.hadamard).tolist()
    assert bits.tolist() == [expected]


def test_hnoma_rejects_bad_shapes():
    p = PowerProfile(1.0, (0.7, 0.3))
    cb = build_hnoma_codebook(2)
    with pytest.raises(ValueError):
        hnoma_receive(np.ones((3, 2)), 1.0, p, cb)
    with pytest.raises(ValueError):
        hnoma_transmit([[1, 0, 1]], p, cb)
    with pytest.raises(ValueError):
        hnoma_receive(np.ones(3), 1.0, p, cb, detector="other")


def test_usman_unitary_example():
    s = np.array([1 + 1j, 1 - 1j]) / math.sqrt(2)
    assert np.allclose(normalized_hadamard(2) @ s, [1, 1j])


def test_usman_unitarity():
    rng = np.random.default_rng(4)
    s = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    assert np.linalg.norm(normalized_hadamard(8) @ s) == pytest.approx(np.linalg.norm(s))


def test_usman_noiseless_round_trip_exhaustive_n2():
    p = PowerProfile(1.0, (0.85, 0.15))
    s = np.array(list(product(QPSK.points, repeat=4))).reshape(-1, 2, 2)
    y = usman_noma_transmit(s, p).samples
    for k in range(2):
        assert np.allclose(QPSK.points[usman_noma_receive(y, 1.0, p, QPSK, k)], s[:, k])


def test_usman_noiseless_round_trip_n4():
    al = np.array([0.96, 0.038, 0.0015, 0.00006])
    p = PowerProfile(1.0, al / al.sum())
    s = QPSK.points[np.random.default_rng(0).integers(0, 4, (3000, 4, 4))]
    y = usman_noma_transmit(s, p).samples
    chips = usman_chip_alphabet(QPSK, 4)
    for k in range(4):
        assert np.allclose(QPSK.points[usman_noma_receive(y, 1.0, p, QPSK, k, chips)], s[:, k])


def test_usman_dimension_checks():
    p = PowerProfile(1.0, (0.85, 0.15))
    with pytest.raises(ValueError):
        usman_noma_transmit(np.ones((3, 2, 2)), p, order=4)
    with pytest.raises(ValueError):
        usman_noma_receive(np.ones(4), 1.0, p, QPSK, 0)


def test_identity_far_noiseless_form():
    rng = np.random.default_rng(1)
    x1, x2 = cn(rng, 100), cn(rng, 100)
    r = sic_identity_check(x1, x2, 0.7, 0.3, 0.5 + 0.5j, np.zeros(100))
    assert np.allclose(r["far_combined"], x1 + 0.5 * math.sqrt(0.3 / 0.7) * (x1 - x2))


def test_identity_equal_powers():
    x = np.array([1 + 2j, -0.5j])
    r = sic_identity_check(x, x, 1.0, 1.0, 2.0, np.zeros(2))
    assert np.allclose(r["far_combined"], x)


def test_identity_residuals_and_sign_convention():
    rng = np.random.default_rng(2)
    n = 10_000
    r = sic_identity_check(cn(rng, n), cn(rng, n), 0.8, 0.2, 0.3 - 1.1j, cn(rng, n))
    assert np.max(np.abs(r["far_residual"])) < 1e-12
    assert np.max(np.abs(r["near_combined_residual"])) < 1e-12
    assert r["near_diff_sign_matching"] == "minus"
    assert np.max(np.abs(r["near_diff_residual_minus"])) < 1e-12


def test_identity_preconditions():
    with pytest.raises(ValueError):
        sic_identity_check(1, 1, 0.0, 1.0, 1.0, 0)
    with pytest.raises(ValueError):
        sic_identity_check(1, 1, 1.0, 1.0, 0.0, 0)
