import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..validation import check_vector


class Preconditioner(BaseEstimator):
    """Black-box z = M^{-1} v.

    Subclasses implement ``fit(A, partition=None)``, ``_apply`` and
    ``_apply_transpose``. ``apply`` must never mutate fitted state, so two
    applies to the same vector agree bitwise.
    """

    def fit(self, A, partition=None):
        raise NotImplementedError

    def apply(self, v):
        check_is_fitted(self)
        return self._apply(check_vector(v, self.n_, name="v"))

    def apply_transpose(self, v):
        check_is_fitted(self)
        return self._apply_transpose(check_vector(v, self.n_, name="v"))

    def __call__(self, v):
        return self.apply(v)

    def norm_estimate(self, iters=60, seed=0):
        """Power-iteration estimate of ||M^{-1}||_2 (approaches it from below)."""
        return operator_norm_estimate(self.apply, self.apply_transpose, self.n_, iters, seed)


def operator_norm_estimate(matvec, rmatvec, n, iters=60, seed=0, rtol=1e-12):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = rmatvec(matvec(x))
        ny = float(np.linalg.norm(y))
        if ny == 0.0:
            return 0.0
        new = math.sqrt(ny)
        x = y / ny
        if abs(new - est) <= rtol * new:
            return new
        est = new
    return est


class IdentityPreconditioner(Preconditioner):
    def fit(self, A, partition=None):
        self.n_ = A.shape[0]
        return self

    def _apply(self, v):
        return v.copy()

    _apply_transpose = _apply
