"""MOODS: accept/reject resampling of an imbalanced training set.

Starting from all real minority points plus a small uniform draw of
majority points, each step draws a few more majority points (weighted by a
per-point score ``p``), tops the minority side up with SVM-SMOTE points,
retrains the network from scratch on the candidate and keeps the candidate
only if the validation F1 and minority F1 both strictly improve. A rejected
draw has its weights halved so the same majority points become less likely
to be proposed again.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataset import Dataset, concat, save_csv
from .exceptions import DrawExhausted, InitializationError
from .metrics import F1Report, evaluate_f1
from .model import ModelState, TrainConfig, init_model, train
from .oversample import SmoteConfig, svm_smote_generate

log = logging.getLogger(__name__)

ACCEPTED, REJECTED, INITIAL = "accepted", "rejected", "initial"
TRACE_COLUMNS = ("step", "decision", "one_minus_f1", "one_minus_f1_minority", "size", "draw_size", "n_synthetic")


@dataclass(frozen=True)
class MoodsConfig:
    max_iter: int = 200
    patience: int = 20
    train: TrainConfig = TrainConfig()
    smote: SmoteConfig = SmoteConfig()
    seed: int = 0
    init_seed: int | None = None  # network initialization; None -> seed

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")

    @property
    def model_seed(self) -> int:
        return self.seed if self.init_seed is None else self.init_seed


@dataclass(frozen=True)
class StepRecord:
    step: int
    decision: str
    one_minus_f1: float
    one_minus_f1_minority: float
    size: int
    draw_size: int
    n_synthetic: int

    def row(self):
        return [self.step, self.decision, repr(self.one_minus_f1), repr(self.one_minus_f1_minority),
                self.size, self.draw_size, self.n_synthetic]


@dataclass(frozen=True, eq=False)
class SamplerState:
    """Sampler state between steps.

    Index arrays are positions into ``train``. ``p`` is aligned with
    ``pool``. ``k`` counts accepted steps and ``iteration`` counts all
    steps taken.
    """

    train: Dataset
    minority: np.ndarray
    accepted: np.ndarray
    synthetic: np.ndarray
    pool: np.ndarray
    p: np.ndarray
    draw_size: int
    best_f1: float
    best_f1_minority: float
    model: ModelState = field(repr=False)
    report: F1Report | None = field(default=None, repr=False)
    k: int = 0
    iteration: int = 0
    rejection_streak: int = 0
    seed: int = 0

    def sample(self) -> Dataset:
        return build_sample(self.train, self.minority, self.accepted, self.synthetic)


def build_sample(train: Dataset, minority, accepted, synthetic) -> Dataset:
    """Real minority, then synthetic minority, then accepted majority."""
    syn = train.with_points(synthetic, np.ones(len(synthetic), dtype=np.int64), np.full(len(synthetic), -1))
    return concat([train.subset(minority), syn, train.subset(accepted)])


def _seed(*parts) -> int:
    return int(np.random.SeedSequence(parts).generate_state(1)[0])


def evaluate(candidate: Dataset, D_v: Dataset, cfg: MoodsConfig):
    """Train a freshly initialized network on `candidate` and score it on `D_v`.

    Returns ``(F1, F1_minority, model, report)``.
    """
    model = train(init_model(candidate.n_features, cfg.model_seed), candidate, cfg.train)
    report = evaluate_f1(model, D_v)
    return report.f1, report.f1_minority, model, report


def initialize(train_set: Dataset, D_v: Dataset, cfg: MoodsConfig) -> SamplerState:
    """Start state: all real minority plus ``ceil(|minority| / 2)`` uniformly drawn majority points."""
    minority = np.flatnonzero(train_set.y == 1)
    majority = np.flatnonzero(train_set.y == 0)
    if len(minority) < 2:
        raise InitializationError(f"need at least 2 minority training points, got {len(minority)}")
    m0 = math.ceil(len(minority) / 2)
    if len(majority) < m0:
        raise InitializationError(f"majority pool of {len(majority)} cannot supply {m0} initial points")
    rng = np.random.default_rng(_seed(cfg.seed, 0, 0))
    drawn = rng.choice(majority, size=m0, replace=False)
    pool = np.setdiff1d(majority, drawn)
    synthetic = np.empty((0, train_set.n_features))
    f1, f1_min, model, report = evaluate(build_sample(train_set, minority, drawn, synthetic), D_v, cfg)
    return SamplerState(
        train=train_set,
        minority=minority,
        accepted=drawn,
        synthetic=synthetic,
        pool=pool,
        p=np.full(len(pool), 1.0 / max(len(pool), 1)),
        draw_size=m0,
        best_f1=f1,
        best_f1_minority=f1_min,
        model=model,
        report=report,
        seed=cfg.seed,
    )


def weighted_majority_draw(state: SamplerState, count, rng=None) -> np.ndarray:
    """Draw `count` distinct pool slots without replacement, with probability proportional to ``p``.

    Returns indices into ``state.pool`` (and ``state.p``).

    Raises
    ------
    DrawExhausted
        If fewer than `count` pool points carry positive weight.
    """
    if rng is None:
        rng = np.random.default_rng(_seed(state.seed, state.iteration + 1, 1))
    positive = int(np.count_nonzero(state.p > 0))
    if count > positive:
        raise DrawExhausted(f"cannot draw {count} points from a pool with {positive} drawable points")
    weights = state.p / state.p.sum()
    return np.sort(rng.choice(len(state.pool), size=count, replace=False, p=weights))


@dataclass(frozen=True, eq=False)
class Proposal:
    candidate: Dataset
    slots: np.ndarray
    drawn: np.ndarray
    synthetic: np.ndarray
    n_new_synthetic: int


def synthetic_count(n_minority, n_majority) -> int:
    """Synthetic points needed to bring the minority side up to the majority count."""
    return max(0, n_majority - n_minority)


def propose(state: SamplerState, cfg: MoodsConfig) -> Proposal:
    """Draw majority points and top up the minority side with SVM-SMOTE points."""
    t = state.iteration + 1
    slots = weighted_majority_draw(state, state.draw_size)
    drawn = state.pool[slots]
    accepted = np.concatenate([state.accepted, drawn])
    base = build_sample(state.train, state.minority, accepted, state.synthetic)
    n_new = synthetic_count(len(state.minority) + len(state.synthetic), len(accepted))
    new = svm_smote_generate(base, n_new, cfg.smote, seed=_seed(state.seed, t, 2))
    synthetic = np.vstack([state.synthetic, new.X])
    return Proposal(
        candidate=build_sample(state.train, state.minority, accepted, synthetic),
        slots=slots,
        drawn=drawn,
        synthetic=synthetic,
        n_new_synthetic=len(new),
    )


def is_improvement(f1, f1_minority, best_f1, best_f1_minority) -> bool:
    return (1 - f1) < (1 - best_f1) and (1 - f1_minority) < (1 - best_f1_minority)


def step(state: SamplerState, D_v: Dataset, cfg: MoodsConfig) -> tuple[SamplerState, StepRecord]:
    """One outer iteration: propose, retrain, then accept or reject."""
    prop = propose(state, cfg)
    f1, f1_min, model, report = evaluate(prop.candidate, D_v, cfg)
    t = state.iteration + 1
    if is_improvement(f1, f1_min, state.best_f1, state.best_f1_minority):
        keep = np.ones(len(state.pool), dtype=bool)
        keep[prop.slots] = False
        new = replace(
            state,
            accepted=np.concatenate([state.accepted, prop.drawn]),
            synthetic=prop.synthetic,
            pool=state.pool[keep],
            p=state.p[keep],
            draw_size=state.draw_size + 1,
            best_f1=f1,
            best_f1_minority=f1_min,
            model=model,
            report=report,
            k=state.k + 1,
            iteration=t,
            rejection_streak=0,
        )
        decision = ACCEPTED
    else:
        p = state.p.copy()
        p[prop.slots] /= 2
        new = replace(
            state,
            p=p,
            draw_size=max(1, state.draw_size - 1),
            iteration=t,
            rejection_streak=state.rejection_streak + 1,
        )
        decision = REJECTED
    record = StepRecord(
        step=t,
        decision=decision,
        one_minus_f1=1 - f1,
        one_minus_f1_minority=1 - f1_min,
        size=len(prop.candidate),
        draw_size=state.draw_size,
        n_synthetic=len(prop.synthetic),
    )
    log.debug("step %d %s: F1=%.4f F1_m=%.4f |S|=%d", t, decision, f1, f1_min, len(prop.candidate))
    return new, record


def initial_record(state: SamplerState) -> StepRecord:
    return StepRecord(0, INITIAL, 1 - state.best_f1, 1 - state.best_f1_minority,
                      len(state.minority) + len(state.accepted) + len(state.synthetic),
                      state.draw_size, len(state.synthetic))


@dataclass(frozen=True, eq=False)
class MoodsResult:
    sample: Dataset
    model: ModelState
    trace: list
    state: SamplerState
    stop_reason: str

    @property
    def accepted_trace(self):
        return [r for r in self.trace if r.decision != REJECTED]


def run(split, cfg: MoodsConfig = MoodsConfig()) -> MoodsResult:
    """Run the sampler on ``split.train`` with ``split.validation`` as the selection set.

    Stops after ``cfg.max_iter`` steps, ``cfg.patience`` consecutive
    rejections, an exhausted majority pool, or once a validation score of
    1 makes further strict improvement impossible.
    """
    state = initialize(split.train, split.validation, cfg)
    trace = [initial_record(state)]
    reason = "max_iter"
    while state.iteration < cfg.max_iter:
        if state.rejection_streak >= cfg.patience:
            reason = "patience"
            break
        if state.best_f1 >= 1.0 or state.best_f1_minority >= 1.0:
            reason = "perfect_validation"
            break
        try:
            state, record = step(state, split.validation, cfg)
        except DrawExhausted:
            reason = "pool_exhausted"
            break
        trace.append(record)
    return MoodsResult(state.sample(), state.model, trace, state, reason)


def write_trace(trace, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in trace:
            w.writerow(r.row())
    return path


def read_trace(path) -> list:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    return [
        StepRecord(int(r["step"]), r["decision"], float(r["one_minus_f1"]), float(r["one_minus_f1_minority"]),
                   int(r["size"]), int(r["draw_size"]), int(r["n_synthetic"]))
        for r in rows
    ]


def save_sample(sample: Dataset, path) -> Path:
    """Final training set as CSV with ``provenance`` and source ``row`` columns."""
    return save_csv(sample, path, provenance=True)


def load_sample(path, template: Dataset) -> Dataset:
    """Read a file written by :func:`save_sample`; labels are decoded with `template`'s."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = list(reader)
    n = len(header) - 3
    X = np.array([[float(v) for v in r[:n]] for r in rows], dtype=np.float64).reshape(len(rows), n)
    y = np.array([r[n] == template.minority_label for r in rows], dtype=np.int64)
    index = np.array([int(r[n + 2]) for r in rows], dtype=np.int64)
    return template.with_points(X, y, index)
