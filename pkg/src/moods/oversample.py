"""Synthetic minority generation: SMOTE and SVM-SMOTE.

Synthetic points carry label 1 and ``index == -1`` so they can always be
told apart from real rows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .dataset import Dataset
from .svm import SvmModel, fit_svm


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    m_neighbors: int = 10
    C: float = 1.0
    gamma: float | None = None  # None -> 1 / n_features
    out_step: float = 0.5
    svm_tol: float = 1e-3
    svm_max_iter: int = 100_000

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.m_neighbors < self.k_neighbors:
            raise ValueError("m_neighbors must be >= k_neighbors")
        if self.C <= 0:
            raise ValueError("C must be > 0")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if not 0 < self.out_step <= 1:
            raise ValueError("out_step must lie in (0, 1]")


def nearest_neighbors(ref, k, query=None, self_positions=None) -> np.ndarray:
    """Indices into `ref` of the `k` nearest points to each query row.

    Without `query`, each row of `ref` is queried against the others (the
    point itself is excluded, duplicates are not). `self_positions` gives,
    for an explicit `query`, the row of `ref` each query point is, to be
    excluded likewise.
    """
    ref = np.asarray(ref, dtype=np.float64)
    if query is None:
        query, self_positions = ref, np.arange(len(ref))
    exclude = self_positions is not None
    kq = min(k + exclude, len(ref))
    _, idx = cKDTree(ref).query(query, k=kq)
    idx = np.asarray(idx).reshape(len(query), kq)
    if not exclude:
        return idx[:, :k]
    out = np.empty((len(query), kq - 1), dtype=np.int64)
    for r, (row, me) in enumerate(zip(idx, self_positions)):
        hit = np.flatnonzero(row == me)
        out[r] = np.delete(row, hit[0] if len(hit) else kq - 1)
    return out[:, :k]


def _synthetic(template: Dataset, X) -> Dataset:
    X = np.asarray(X, dtype=np.float64).reshape(-1, template.n_features)
    return template.with_points(X, np.ones(len(X), dtype=np.int64), np.full(len(X), -1))


def smote_generate(minority: Dataset, count, k=5, seed=0) -> Dataset:
    """Classic SMOTE: ``x + u * (x_nn - x)`` with ``x_nn`` among x's k nearest minority neighbors."""
    n = len(minority)
    if n < 2:
        raise ValueError(f"SMOTE needs at least 2 minority points, got {n}")
    if count < 0:
        raise ValueError("count must be >= 0")
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}] for {n} minority points, got {k}")
    rng = np.random.default_rng(seed)
    X = minority.X
    nn = nearest_neighbors(X, k)
    base = rng.integers(n, size=count)
    pick = nn[base, rng.integers(k, size=count)]
    u = rng.random(count)[:, None]
    return _synthetic(minority, X[base] + u * (X[pick] - X[base]))


def danger_positions(S: Dataset, svm: SvmModel, m_neighbors=10) -> np.ndarray:
    """Positions in `S` of minority support vectors with a majority point among their m nearest neighbors."""
    sv = svm.support
    cand = sv[S.y[sv] == 1]
    if len(cand) == 0 or len(S) < 2:
        return cand
    m = min(m_neighbors, len(S) - 1)
    nn = nearest_neighbors(S.X, m, query=S.X[cand], self_positions=cand)
    n_majority = (S.y[nn] == 0).sum(axis=1)
    return cand[n_majority > 0]


def danger_minority(S: Dataset, svm: SvmModel, cfg: SmoteConfig = SmoteConfig()) -> Dataset:
    """Borderline minority points: support vectors whose neighborhood is not purely minority."""
    return S.subset(danger_positions(S, svm, cfg.m_neighbors))


def svm_smote_generate(S: Dataset, count, cfg: SmoteConfig = SmoteConfig(), seed=0) -> Dataset:
    """Generate `count` minority points around the SVM's borderline minority support vectors.

    Borderline points are visited round-robin in a seeded order. If fewer
    than half of a point's m nearest neighbors are majority, the new point is
    interpolated toward one of its k nearest minority neighbors; otherwise it
    is pushed away from its nearest majority neighbor by at most
    ``cfg.out_step`` times their distance. Falls back to plain SMOTE when no
    borderline point exists.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    min_pos = np.flatnonzero(S.y == 1)
    maj_pos = np.flatnonzero(S.y == 0)
    if len(min_pos) < 2:
        raise ValueError(f"SVM-SMOTE needs at least 2 minority points, got {len(min_pos)}")
    if count == 0:
        return _synthetic(S, np.empty((0, S.n_features)))
    k = min(cfg.k_neighbors, len(min_pos) - 1)
    if len(maj_pos) == 0:
        return smote_generate(S.subset(min_pos), count, k, seed)

    svm = fit_svm(S, C=cfg.C, gamma=cfg.gamma, tol=cfg.svm_tol, max_iter=cfg.svm_max_iter, seed=seed)
    danger = danger_positions(S, svm, cfg.m_neighbors)
    if len(danger) == 0:
        return smote_generate(S.subset(min_pos), count, k, seed)

    rng = np.random.default_rng(seed)
    X = S.X
    m = min(cfg.m_neighbors, len(S) - 1)
    neigh = nearest_neighbors(X, m, query=X[danger], self_positions=danger)
    interpolate = (S.y[neigh] == 0).sum(axis=1) < m / 2

    # k nearest minority neighbors of each danger point, as positions in S
    where_in_min = np.searchsorted(min_pos, danger)
    min_nn = min_pos[nearest_neighbors(X[min_pos], k, query=X[danger], self_positions=where_in_min)]
    # nearest majority point of each danger point
    maj_nn = maj_pos[nearest_neighbors(X[maj_pos], 1, query=X[danger])[:, 0]]

    visit = rng.permutation(len(danger))
    slots = visit[np.arange(count) % len(danger)]
    u = rng.random(count)
    which = rng.integers(k, size=count)
    out = np.empty((count, S.n_features))
    for t, d in enumerate(slots):
        x = X[danger[d]]
        if interpolate[d]:
            out[t] = x + u[t] * (X[min_nn[d, which[t]]] - x)
        else:
            out[t] = x + u[t] * cfg.out_step * (x - X[maj_nn[d]])
    return _synthetic(S, out)
