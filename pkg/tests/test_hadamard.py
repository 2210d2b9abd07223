from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hnoma.hadamard import (
    FAST_THRESHOLD,
    build_hadamard,
    forward_transform,
    fwht,
    inverse_transform,
    normalized_hadamard,
    slice_bits,
)


def test_order_four_matrix():
    h = build_hadamard(4).entries
    expected = np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]])
    assert (h == expected).all()


@pytest.mark.parametrize("n", [1, 2, 4, 8, 16, 128])
def test_orthogonality(n):
    h = build_hadamard(n).entries
    assert (h @ h.T == n * np.eye(n, dtype=int)).all()


@pytest.mark.parametrize("bad", [0, 3, 6, -2, 2.0, True, 2**17])
def test_rejects_bad_orders(bad):
    with pytest.raises(ValueError):
        build_hadamard(bad)


def test_forward_example():
    t = forward_transform([1, 1, 0, 1], build_hadamard(4))
    assert t.w.tolist() == [3, -1, 1, 1]
    assert t.shifted.tolist() == [5, 1, 3, 3]


def test_shift_makes_entries_nonnegative():
    h = build_hadamard(8)
    d = np.array(list(product((0, 1), repeat=8)))
    s = forward_transform(d, h).shifted
    assert s.min() >= 0 and s.max() <= 3 * 8 // 2


@pytest.mark.parametrize("n", [2, 4, 8])
def test_exhaustive_round_trip(n):
    h = build_hadamard(n)
    d = np.array(list(product((0, 1), repeat=n)), dtype=np.int8)
    assert (inverse_transform(forward_transform(d, h).shifted, h) == d).all()


def test_slicing_threshold_and_tie():
    bits, raw = inverse_transform(np.array([2.4, 1.6]), build_hadamard(2), return_raw=True)
    assert np.allclose(raw, [1.0, 0.4])
    assert bits.tolist() == [1, 0]
    assert slice_bits(np.array([0.5, 0.4999])).tolist() == [1, 0]


def test_length_mismatch_and_non_binary():
    h = build_hadamard(4)
    with pytest.raises(ValueError, match="length 3"):
        forward_transform([1, 0, 1], h)
    with pytest.raises(ValueError):
        forward_transform([1, 0, 2, 0], h)


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32, 64, 128, 256])
def test_fast_transform_matches_matrix(n):
    rng = np.random.default_rng(n)
    x = rng.integers(-50, 50, size=(20, n))
    assert np.array_equal(fwht(x), x @ build_hadamard(n).entries.T)


def test_fast_path_used_above_threshold():
    n = FAST_THRESHOLD * 2
    h = build_hadamard(n)
    d = np.random.default_rng(0).integers(0, 2, (5, n))
    assert (inverse_transform(forward_transform(d, h).shifted, h) == d).all()


def test_normalized_is_unitary():
    hn = normalized_hadamard(8)
    assert np.allclose(hn @ hn.T, np.eye(8))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 4, 8, 16]), st.data())
def test_round_trip_property(n, data):
    bits = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    h = build_hadamard(n)
    assert inverse_transform(forward_transform(bits, h).shifted, h).tolist() == bits
