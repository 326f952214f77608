"""Soft-margin kernel SVM trained by sequential minimal optimization.

The dual problem solved is::

    min_a  1/2 a^T Q a - sum(a)   s.t.  0 <= a_i <= C,  sum(a_i y_i) = 0

with ``Q_ij = y_i y_j K(x_i, x_j)`` and ``y_i`` in {-1, +1}. Working pairs
are chosen by maximal violation for the first index and second-order gain
for the second (Fan, Chen & Lin, 2005). Kernel columns are computed on
demand and cached, so memory grows with the number of touched columns
rather than with ``n**2``.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import TrainingError

TAU = 1e-12


def rbf_kernel(A, B, gamma):
    return np.exp(-gamma * cdist(np.atleast_2d(A), np.atleast_2d(B), "sqeuclidean"))


@dataclass(frozen=True, eq=False)
class SvmModel:
    """Fitted SVM. ``alpha``, ``y`` and ``X`` are in training order."""

    X: np.ndarray
    y: np.ndarray
    alpha: np.ndarray
    bias: float
    gamma: float
    C: float
    iterations: int = 0

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.alpha > 0)

    def decision_function(self, X) -> np.ndarray:
        sv = self.support
        if len(sv) == 0:
            return np.full(len(np.atleast_2d(X)), self.bias)
        K = rbf_kernel(X, self.X[sv], self.gamma)
        return K @ (self.alpha[sv] * self.y[sv]) + self.bias

    def predict(self, X) -> np.ndarray:
        """Labels in {0, 1} (1 = minority = positive side)."""
        return (self.decision_function(X) > 0).astype(np.int64)

    def dual_objective(self) -> float:
        return dual_objective(self.alpha, self.y, rbf_kernel(self.X, self.X, self.gamma))


def dual_objective(alpha, y, K) -> float:
    ay = alpha * y
    return float(0.5 * ay @ K @ ay - alpha.sum())


class _Columns:
    """LRU cache of kernel columns ``K[:, i]``."""

    def __init__(self, X, gamma, budget_bytes=256 * 2**20):
        self.X = X
        self.gamma = gamma
        self.capacity = max(2, budget_bytes // (8 * max(len(X), 1)))
        self._cache = OrderedDict()

    def __getitem__(self, i):
        col = self._cache.get(i)
        if col is None:
            col = rbf_kernel(self.X, self.X[i], self.gamma)[:, 0]
            self._cache[i] = col
            if len(self._cache) > self.capacity:
                self._cache.popitem(last=False)
        else:
            self._cache.move_to_end(i)
        return col


def fit_svm(S, C=1.0, gamma=None, tol=1e-3, max_iter=100_000, seed=0) -> SvmModel:
    """Fit an RBF soft-margin SVM to a two-class dataset.

    Parameters
    ----------
    S : Dataset
        Must contain both classes. Minority (label 1) is the +1 class.
    gamma : float, optional
        RBF bandwidth; defaults to ``1 / n_features``.
    tol : float
        Stop when the maximal KKT violation ``m(a) - M(a)`` drops below this.
    seed : int
        Seeds the point order used to break ties in working-set selection.

    Raises
    ------
    TrainingError
        If the KKT tolerance is not reached within `max_iter` pair updates.
    """
    if S.n_minority == 0 or S.n_majority == 0:
        raise ValueError("SVM training set must contain both classes")
    if C <= 0:
        raise ValueError("C must be > 0")
    gamma = 1.0 / S.n_features if gamma is None else float(gamma)
    if gamma <= 0:
        raise ValueError("gamma must be > 0")

    order = np.random.default_rng(seed).permutation(len(S))
    X = S.X[order]
    y = np.where(S.y[order] == 1, 1.0, -1.0)
    n = len(y)
    cols = _Columns(X, gamma)
    Kdiag = np.ones(n)  # RBF
    alpha = np.zeros(n)
    G = -np.ones(n)

    for it in range(max_iter + 1):
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        score = -y * G
        up_scores = np.where(up, score, -np.inf)
        i = int(np.argmax(up_scores))
        g_max = up_scores[i]
        g_min = np.where(low, score, np.inf).min()
        if g_max - g_min < tol:
            break
        if it == max_iter:
            raise TrainingError(f"SMO did not reach KKT tolerance {tol} in {max_iter} iterations "
                                f"(violation {g_max - g_min:.3g})")
        Ki = cols[i]
        gain_b = g_max - score
        curv = Kdiag[i] + Kdiag - 2.0 * Ki
        curv = np.where(curv > 0, curv, TAU)
        gain = np.where(low & (score < g_max), -(gain_b ** 2) / curv, np.inf)
        j = int(np.argmin(gain))
        Kj = cols[j]

        ai, aj = alpha[i], alpha[j]
        quad = max(Kdiag[i] + Kdiag[j] - 2.0 * Ki[j], TAU)
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
                if aj > C:
                    aj, ai = C, total - C
            else:
                if aj < 0:
                    aj, ai = 0.0, total
                if ai < 0:
                    ai, aj = 0.0, total
        d_i, d_j = ai - alpha[i], aj - alpha[j]
        alpha[i], alpha[j] = ai, aj
        # Q[:, t] = y * y_t * K[:, t]
        G += y * (y[i] * d_i * Ki + y[j] * d_j * Kj)

    bias = -_rho(alpha, y, G, C)
    inverse = np.empty_like(order)
    inverse[order] = np.arange(n)
    return SvmModel(
        X=S.X.copy(), y=y[inverse], alpha=alpha[inverse], bias=bias,
        gamma=gamma, C=float(C), iterations=it,
    )


def _rho(alpha, y, G, C):
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(yG[free].mean())
    at_upper = alpha >= C
    ub_mask = (at_upper & (y < 0)) | (~at_upper & (y > 0))
    lb_mask = ~ub_mask
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2)
