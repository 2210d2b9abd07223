"""scikit-learn style wrappers over the functional API.

``HadamardSpreader`` is a plain transformer on bit blocks.  The link
estimators hold one scheme's configuration: ``transform`` maps user bits to
transmitted samples and ``predict`` recovers one user's bits from received
samples and that user's channel gain.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_bits, check_order
from .hadamard import build_hadamard, forward_transform, inverse_transform
from .modem import bits_to_labels, build_square_qam, labels_to_bits
from .noma import (
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

__all__ = ["HadamardSpreader", "TNomaLink", "HNomaLink", "UsmanNomaLink"]


class HadamardSpreader(TransformerMixin, BaseEstimator):
    """Bit blocks ``(n, N)`` to shifted transformed values and back.

    ``order=None`` takes ``N`` from the data seen by ``fit``.
    """

    def __init__(self, order=None):
        self.order = order

    def fit(self, X, y=None):
        X = check_bits(X)
        if X.ndim != 2:
            raise ValueError(f"expected a 2-D array of bit blocks, got shape {X.shape}")
        n = X.shape[1] if self.order is None else self.order
        self.hadamard_ = build_hadamard(check_order(n))
        self.n_features_in_ = self.hadamard_.order
        return self

    def transform(self, X):
        check_is_fitted(self, "hadamard_")
        X = check_bits(X, self.n_features_in_)
        return forward_transform(X, self.hadamard_).shifted

    def inverse_transform(self, X):
        check_is_fitted(self, "hadamard_")
        return np.atleast_2d(inverse_transform(np.asarray(X), self.hadamard_))


class _LinkBase(BaseEstimator):
    def _profile(self):
        return PowerProfile(self.total_power, self.alphas)

    def fit(self, X=None, y=None):
        self.profile_ = self._profile()
        self.qam_ = build_square_qam(self.modulation)
        self.n_users_ = self.profile_.n_layers
        self._build()
        return self

    def _build(self):
        pass

    def _check_user(self, user):
        if not 0 <= user < self.n_users_:
            raise ValueError(f"user must lie in 0..{self.n_users_ - 1}, got {user}")


class TNomaLink(_LinkBase):
    """Superposition with SIC.  ``X`` is ``(n_uses, K * bits_per_symbol)``."""

    def __init__(self, alphas=(0.7, 0.3), total_power=1.0, modulation=4, residual_rho=0.0):
        self.alphas = alphas
        self.total_power = total_power
        self.modulation = modulation
        self.residual_rho = residual_rho

    def transform(self, X):
        check_is_fitted(self, "profile_")
        bps = self.qam_.bits_per_symbol
        X = check_bits(X, self.n_users_ * bps)
        return tnoma_transmit(X.reshape(len(X), self.n_users_, bps), self.profile_,
                              self.qam_).samples

    def predict(self, y, gain=1.0, user=0):
        check_is_fitted(self, "profile_")
        self._check_user(user)
        lab = tnoma_sic_receive(y, gain, self.profile_, self.qam_, user,
                                residual_rho=self.residual_rho)[user]
        return labels_to_bits(lab, self.qam_.bits_per_symbol)


class HNomaLink(_LinkBase):
    """Bit-domain Hadamard spreading; one bit per user per channel use."""

    def __init__(self, alphas=(0.7, 0.3), total_power=1.0, detector="joint",
                 residual_rho=0.0):
        self.alphas = alphas
        self.total_power = total_power
        self.detector = detector
        self.residual_rho = residual_rho

    modulation = 4

    def _build(self):
        self.codebook_ = build_hnoma_codebook(self.n_users_)

    def transform(self, X):
        check_is_fitted(self, "codebook_")
        return hnoma_transmit(X, self.profile_, self.codebook_).samples

    def predict(self, y, gain=1.0, user=None):
        """All users' bits ``(n, N)``, or one column when ``user`` is given."""
        check_is_fitted(self, "codebook_")
        bits = hnoma_receive(y, gain, self.profile_, self.codebook_, self.detector,
                             self.residual_rho)
        if user is None:
            return bits
        self._check_user(user)
        return bits[:, user]


class UsmanNomaLink(_LinkBase):
    """Unitary spreading of QAM symbols over ``N = K`` channel uses.

    ``X`` holds one spreading block per row: ``K * N * bits_per_symbol``
    bits, user-major.
    """

    def __init__(self, alphas=(0.85, 0.15), total_power=1.0, modulation=4):
        self.alphas = alphas
        self.total_power = total_power
        self.modulation = modulation

    def _build(self):
        self.chips_ = usman_chip_alphabet(self.qam_, self.n_users_)

    def transform(self, X):
        check_is_fitted(self, "chips_")
        K, bps = self.n_users_, self.qam_.bits_per_symbol
        X = check_bits(X, K * K * bps)
        lab = bits_to_labels(X.reshape(len(X), K, K * bps), bps)
        return usman_noma_transmit(self.qam_.points[self.qam_.index_of(lab)],
                                   self.profile_).samples

    def predict(self, y, gain=1.0, user=0):
        check_is_fitted(self, "chips_")
        self._check_user(user)
        lab = usman_noma_receive(y, gain, self.profile_, self.qam_, user, self.chips_)
        return labels_to_bits(lab, self.qam_.bits_per_symbol).reshape(len(lab), -1)
