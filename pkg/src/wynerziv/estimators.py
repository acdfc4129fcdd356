"""scikit-learn style wrappers.

Rows of ``X`` are client vectors, rows of ``Y`` the matching side
information held by the server.  Row ``i`` is quantized with the public
randomness substream of client ``i``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .protocol import BALL_SCHEMES, KNOWN_SCHEMES, SCHEMES, make_codec, message_bits
from .publicrand import RandomStream


class WynerZivQuantizer(TransformerMixin, BaseEstimator):
    """Quantize client vectors for decoding against server side information.

    Parameters
    ----------
    scheme : str
        One of ``known_low``, ``known_high``, ``unknown_low``,
        ``unknown_boosted``, ``baseline_mq``.
    n_bits : int
        Per-client budget ``r``.
    delta : float or array-like, optional
        Distance bound per row (known-distance schemes only).
    n_clients : int, optional
        Client count used to tune the known-distance quantizer; defaults
        to the number of rows seen in ``fit``.
    random_state : int
        Master seed of the public randomness.
    round_index : int
        Separates the randomness of successive rounds.
    """

    def __init__(self, scheme="unknown_low", n_bits=32, delta=None, n_clients=None,
                 random_state=0, round_index=0):
        self.scheme = scheme
        self.n_bits = n_bits
        self.delta = delta
        self.n_clients = n_clients
        self.random_state = random_state
        self.round_index = round_index

    def fit(self, X, Y=None):
        X = check_array(X, dtype=np.float64)
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        n_rows, d = X.shape
        n = self.n_clients or n_rows
        if self.scheme in KNOWN_SCHEMES:
            if self.delta is None:
                raise ValueError(f"scheme {self.scheme} needs delta")
            deltas = np.broadcast_to(np.asarray(self.delta, dtype=np.float64), (n_rows,))
            self.codecs_ = [make_codec(self.scheme, n, d, self.n_bits, float(v)) for v in deltas]
        else:
            self.codecs_ = [make_codec(self.scheme, n, d, self.n_bits)] * n_rows
        self.n_features_in_ = d
        self.message_bits_ = self.codecs_[0].message_bits
        return self

    def _stream(self, i):
        return RandomStream(self.random_state, i, f"round:{self.round_index}")

    def _check_rows(self, X, name):
        X = check_array(X, dtype=np.float64)
        if X.shape != (len(self.codecs_), self.n_features_in_):
            raise ValueError(
                f"{name} must have shape ({len(self.codecs_)}, {self.n_features_in_}), got {X.shape}"
            )
        return X

    def encode(self, X):
        """One message per row."""
        check_is_fitted(self, "codecs_")
        X = self._check_rows(X, "X")
        return [codec.encode(x, self._stream(i)) for i, (codec, x) in enumerate(zip(self.codecs_, X))]

    def decode(self, messages, Y):
        """Reconstruct every row from its message and side information."""
        check_is_fitted(self, "codecs_")
        Y = self._check_rows(Y, "Y")
        if len(messages) != len(self.codecs_):
            raise ValueError(f"expected {len(self.codecs_)} messages, got {len(messages)}")
        return np.vstack([
            codec.decode(msg, y, self._stream(i))
            for i, (codec, msg, y) in enumerate(zip(self.codecs_, messages, Y))
        ])

    def transform(self, X, Y):
        """Quantize-then-decode each row of ``X`` against ``Y``."""
        return self.decode(self.encode(X), Y)

    def fit_transform(self, X, Y=None, **fit_params):
        if Y is None:
            raise ValueError("side information Y is required")
        return self.fit(X, Y).transform(X, Y)

    def _more_tags(self):
        return {"requires_y": True}


class WynerZivMeanEstimator(BaseEstimator):
    """Server-side estimate of the mean of the client vectors.

    ``fit(X, Y)`` runs one protocol round; the estimate is ``mean_``.
    Attributes ``reconstructions_`` and ``client_bits_`` hold the
    per-client decoded vectors and message sizes.
    """

    def __init__(self, scheme="unknown_low", n_bits=32, delta=None, random_state=0, round_index=0):
        self.scheme = scheme
        self.n_bits = n_bits
        self.delta = delta
        self.random_state = random_state
        self.round_index = round_index

    def fit(self, X, Y):
        X = check_array(X, dtype=np.float64)
        Y = check_array(Y, dtype=np.float64)
        if self.scheme in BALL_SCHEMES and (
            np.linalg.norm(X, axis=1).max() > 1 + 1e-9 or np.linalg.norm(Y, axis=1).max() > 1 + 1e-9
        ):
            raise ValueError(f"scheme {self.scheme} needs every row inside the unit ball")
        quantizer = WynerZivQuantizer(
            self.scheme, self.n_bits, self.delta, None, self.random_state, self.round_index
        ).fit(X, Y)
        messages = quantizer.encode(X)
        self.reconstructions_ = quantizer.decode(messages, Y)
        self.client_bits_ = [message_bits(m) for m in messages]
        self.mean_ = self.reconstructions_.mean(axis=0)
        self.quantizer_ = quantizer
        return self
