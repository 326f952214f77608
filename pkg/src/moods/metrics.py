"""F1 scores and the overlap / diversification measurements on model outputs.

The model output z is used as a one-dimensional stand-in for the feature
vector. A minority point *overlaps* when its z lies on the majority side of
the decision boundary (``z <= 1/2``). Diversity is the sample variance of z,
compared between two (model, training set) pairs on a log10 scale.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .model import classify, forward


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def n_minority(self) -> int:
        return self.tp + self.fn

    @property
    def n_majority(self) -> int:
        return self.fp + self.tn


@dataclass(frozen=True)
class F1Report:
    f1: float
    f1_minority: float
    f1_majority: float
    counts: ConfusionCounts

    def to_dict(self):
        return asdict(self)


def confusion_from_predictions(y_true, y_pred) -> ConfusionCounts:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    minority = y_true == 1
    tp = int(y_pred[minority].sum())
    fp = int(y_pred[~minority].sum())
    return ConfusionCounts(tp=tp, fn=int(minority.sum()) - tp, fp=fp, tn=int((~minority).sum()) - fp)


def confusion(m, D) -> ConfusionCounts:
    """Confusion counts of model `m` on dataset `D` (minority is the positive class)."""
    if D.n_minority == 0 or D.n_majority == 0:
        raise ValueError("confusion counts need both classes in the evaluation set")
    return confusion_from_predictions(D.y, classify(forward(m, D.X)))


def f1_scores(c: ConfusionCounts) -> F1Report:
    if c.n_minority < 1 or c.n_majority < 1:
        raise ValueError("F1 scores need at least one point of each class")
    f1_min = 2 * c.tp / (2 * c.tp + c.fp + c.fn)
    f1_maj = 2 * c.tn / (2 * c.tn + c.fn + c.fp)
    return F1Report(f1=(f1_min + f1_maj) / 2, f1_minority=f1_min, f1_majority=f1_maj, counts=c)


def evaluate_f1(m, D) -> F1Report:
    return f1_scores(confusion(m, D))


# ---------------------------------------------------------------------------
# Overlap and variance order
# ---------------------------------------------------------------------------

def minority_overlap_fraction(m, S) -> float:
    """Fraction of minority points of `S` with ``z <= 1/2``."""
    X_min = S.X[S.y == 1]
    if len(X_min) == 0:
        raise ValueError("no minority points to measure overlap on")
    return float(np.mean(forward(m, X_min) <= 0.5))


def overlap_decrease(m_before, before, m_after, after) -> float:
    """Drop in minority overlap, in percentage points. Negative when overlap grew."""
    return (minority_overlap_fraction(m_before, before) - minority_overlap_fraction(m_after, after)) * 100


def _class_z(m, S, which):
    label = {"minority": 1, "majority": 0}[which]
    return forward(m, S.X[S.y == label])


def z_variance(m, S, which) -> float:
    z = _class_z(m, S, which)
    if len(z) < 2:
        raise ValueError(f"need at least 2 {which} points for a sample variance, got {len(z)}")
    return float(np.var(z, ddof=1))


def variance_order_increase(m_before, before, m_after, after, which_class="minority") -> float:
    """``log10(var_after / var_before)`` of the z outputs of one class (not floored).

    Returns ``inf`` when the baseline variance is zero and the later one is
    not; the raw variances are available from :func:`z_variance` and are
    carried by :class:`DiversificationReport`.
    """
    v0 = z_variance(m_before, before, which_class)
    v1 = z_variance(m_after, after, which_class)
    return _log_ratio(v1, v0)


def _log_ratio(after, before):
    if before == after:
        return 0.0
    if before == 0:
        return math.inf
    if after == 0:
        return -math.inf
    return math.log10(after / before)


@dataclass(frozen=True)
class DiversificationReport:
    overlap_before: float
    overlap_after: float
    overlap_decrease: float
    var_order_minority: float
    var_order_majority: float
    var_order_avg: float
    balance: float
    var_minority_before: float
    var_minority_after: float
    var_majority_before: float
    var_majority_after: float

    def to_dict(self):
        return asdict(self)


def diversification_report(m_before, before, m_after, after) -> DiversificationReport:
    """Overlap decrease, per-class and mean variance order increase, and balance of `after`."""
    k0 = minority_overlap_fraction(m_before, before)
    k1 = minority_overlap_fraction(m_after, after)
    var = {
        (which, side): z_variance(model, data, which)
        for which in ("minority", "majority")
        for side, model, data in (("before", m_before, before), ("after", m_after, after))
    }
    o_min = _log_ratio(var["minority", "after"], var["minority", "before"])
    o_maj = _log_ratio(var["majority", "after"], var["majority", "before"])
    return DiversificationReport(
        overlap_before=k0,
        overlap_after=k1,
        overlap_decrease=(k0 - k1) * 100,
        var_order_minority=o_min,
        var_order_majority=o_maj,
        var_order_avg=(o_min + o_maj) / 2,
        balance=after.n_minority / len(after),
        var_minority_before=var["minority", "before"],
        var_minority_after=var["minority", "after"],
        var_majority_before=var["majority", "before"],
        var_majority_after=var["majority", "after"],
    )


def epsilon_delta_check(r: DiversificationReport, epsilon, delta) -> bool:
    """True iff overlap fell by at least `epsilon` points and variance rose by at least `delta` orders."""
    return r.overlap_decrease >= epsilon and r.var_order_avg >= delta


# ---------------------------------------------------------------------------
# z histograms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ZHistogram:
    z_minority: np.ndarray
    z_majority: np.ndarray
    edges: np.ndarray
    counts_minority: np.ndarray
    counts_majority: np.ndarray

    def bin_of(self, z) -> np.ndarray:
        # last bin is closed on the right, as in np.histogram
        return np.clip(np.searchsorted(self.edges, z, side="right") - 1, 0, len(self.edges) - 2)

    def to_csv(self, path) -> Path:
        """One row per point: ``z, class, bin``."""
        path = Path(path)
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["z", "class", "bin"])
            for label, zs in (("minority", self.z_minority), ("majority", self.z_majority)):
                for z, b in zip(zs, self.bin_of(zs)):
                    w.writerow([repr(float(z)), label, int(b)])
        return path


def z_histogram(m, S, bins=30) -> ZHistogram:
    """Equal-width histogram of z per class over the joint range of both classes."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    z = forward(m, S.X)
    edges = np.histogram_bin_edges(z, bins=bins)
    z_min, z_maj = z[S.y == 1], z[S.y == 0]
    return ZHistogram(
        z_minority=z_min,
        z_majority=z_maj,
        edges=edges,
        counts_minority=np.histogram(z_min, bins=edges)[0],
        counts_majority=np.histogram(z_maj, bins=edges)[0],
    )
