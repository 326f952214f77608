"""Independent reference implementations the tests compare the package against.

None of these import the code under test except for plain evaluation
helpers (loss evaluation at given parameters, the dual objective).
"""
import itertools
import math

import numpy as np
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from moods.model import loss_and_gradient
from moods.svm import dual_objective


def fd_gradient(m, X, y, h=1e-5):
    """Central differences, one coordinate at a time."""
    p = m.params.copy()
    g = np.empty_like(p)
    for i in range(p.size):
        old = p[i]
        p[i] = old + h
        up, _ = loss_and_gradient(m, X, y, p)
        p[i] = old - h
        down, _ = loss_and_gradient(m, X, y, p)
        p[i] = old
        g[i] = (up - down) / (2 * h)
    return g


def direct_loss(z, y):
    # straight transcription: -log of the softmax over logits (z, 1 - z), averaged
    total = 0.0
    for zi, yi in zip(z, y):
        e_min, e_maj = math.exp(zi), math.exp(1 - zi)
        p = (e_min if yi == 1 else e_maj) / (e_min + e_maj)
        total -= math.log(p)
    return total / len(z)


def brute_force_f1(y_true, y_pred):
    # independent: per-class precision/recall from explicit loops
    scores = []
    for cls in (1, 0):
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p == cls)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != cls and p == cls)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p != cls)
        scores.append(0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn))
    return scores


def on_segment(p, a, b, tol=1e-9):
    """True iff p = a + u (b - a) for some u in [0, 1]."""
    d = b - a
    dd = d @ d
    if dd == 0:
        return np.allclose(p, a, atol=tol)
    u = (p - a) @ d / dd
    return -tol <= u <= 1 + tol and np.allclose(a + u * d, p, atol=tol)


def on_some_segment(p, X, k):
    # exhaustive: every (x, x_nn) pair with x_nn among x's k nearest others
    D = cdist(X, X)
    np.fill_diagonal(D, np.inf)
    for i in range(len(X)):
        kth = np.sort(D[i])[k - 1]
        for j in np.flatnonzero(D[i] <= kth + 1e-12):
            if on_segment(p, X[i], X[j]):
                return True
    return False


def in_hull(p, V, tol=1e-9):
    # p = V^T w with w >= 0, sum(w) = 1
    A = np.vstack([V.T, np.ones(len(V))])
    res = linprog(np.zeros(len(V)), A_eq=A, b_eq=np.r_[p, 1.0], bounds=(0, None), method="highs")
    return res.status == 0


def brute_force_dual(y, K, C):
    """Exact minimum of the SVM dual by enumerating active sets.

    Each coordinate is at 0, at C, or free. For a given assignment the free
    coordinates solve the equality-constrained KKT system; feasible
    solutions are compared by objective. Fine for up to ~6 duals (3**6).
    """
    n = len(y)
    Q = np.outer(y, y) * K
    best = (np.inf, None)
    for states in itertools.product((0, 1, 2), repeat=n):
        states = np.array(states)
        a = np.where(states == 2, C, 0.0)
        F = np.flatnonzero(states == 1)
        if len(F):
            B = np.flatnonzero(states != 1)
            A = np.zeros((len(F) + 1, len(F) + 1))
            A[:-1, :-1] = Q[np.ix_(F, F)]
            A[:-1, -1] = y[F]
            A[-1, :-1] = y[F]
            rhs = np.r_[1.0 - Q[np.ix_(F, B)] @ a[B], -y[B] @ a[B]]
            sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            if np.abs(A @ sol - rhs).max() > 1e-9:
                continue
            a[F] = sol[:-1]
        if a.min() < -1e-12 or a.max() > C + 1e-12 or abs(a @ y) > 1e-12:
            continue
        obj = dual_objective(a, y, K)
        if obj < best[0]:
            best = (obj, a)
    return best
