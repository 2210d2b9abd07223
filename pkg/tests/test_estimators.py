from itertools import product

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from hnoma.estimators import HadamardSpreader, HNomaLink, TNomaLink, UsmanNomaLink


def test_spreader_round_trip_and_params():
    X = np.array(list(product((0, 1), repeat=4)))
    sp = HadamardSpreader().fit(X)
    assert sp.get_params() == {"order": None}
    assert np.array_equal(sp.inverse_transform(sp.transform(X)), X)
    assert sp.fit_transform(X[:1]).tolist() == [[2, 2, 2, 2]]


def test_spreader_validation():
    with pytest.raises(NotFittedError):
        HadamardSpreader().transform([[0, 1]])
    with pytest.raises(ValueError):
        HadamardSpreader().fit([[0, 1, 1]])
    with pytest.raises(ValueError):
        HadamardSpreader().fit([[0, 2]])


def test_links_noiseless():
    rng = np.random.default_rng(0)
    t = TNomaLink().fit()
    X = rng.integers(0, 2, (50, 4))
    y = t.transform(X)
    assert np.array_equal(t.predict(y, user=1).reshape(50, 2), X[:, 2:])

    h = HNomaLink(alphas=(0.4, 0.3, 0.2, 0.1)).fit()
    X = rng.integers(0, 2, (50, 4))
    assert np.array_equal(h.predict(h.transform(X)), X)
    assert np.array_equal(h.predict(h.transform(X), user=2), X[:, 2])

    u = UsmanNomaLink().fit()
    X = rng.integers(0, 2, (20, 8))
    y = u.transform(X)
    assert np.array_equal(u.predict(y, user=0), X[:, :4])


def test_clone_and_set_params():
    h = HNomaLink(detector="sic")
    c = clone(h).set_params(detector="joint")
    assert c.get_params()["detector"] == "joint" and h.detector == "sic"
    with pytest.raises(ValueError):
        TNomaLink(alphas=(0.2, 0.8)).fit()
    with pytest.raises(ValueError):
        TNomaLink().fit().predict(np.ones(2), user=5)
