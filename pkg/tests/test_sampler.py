from dataclasses import replace

import numpy as np
import pytest

import moods.sampler as sampler
from moods.dataset import Dataset, DataSplit, split, standardize
from moods.exceptions import DrawExhausted, InitializationError
from moods.metrics import confusion_from_predictions, f1_scores
from moods.model import TrainConfig, classify, forward
from moods.sampler import (ACCEPTED, REJECTED, MoodsConfig, build_sample, evaluate, initialize, load_sample,
                           propose, read_trace, run, save_sample, step, synthetic_count, weighted_majority_draw,
                           write_trace)

FAST = TrainConfig(grad_tol=0.4, max_epochs=40)


def blobs(n_min, n_maj, sep=1.5, seed=0, n_features=2):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(sep, 1.0, size=(n_min, n_features)), rng.normal(0.0, 1.0, size=(n_maj, n_features))])
    return Dataset(X, np.r_[np.ones(n_min, int), np.zeros(n_maj, int)])


def plain_split(train, val=None):
    val = val if val is not None else train
    return DataSplit(train, val, val)


@pytest.fixture(scope="module")
def fixture_split():
    return standardize(split(blobs(20, 180, seed=3), seed=1))


@pytest.fixture(scope="module")
def fixture_run(fixture_split):
    cfg = MoodsConfig(max_iter=25, patience=10, train=FAST, seed=4)
    return run(fixture_split, cfg), cfg


class TestInitialize:
    def test_arithmetic(self):
        S = blobs(10, 100)
        state = initialize(S, S, MoodsConfig(train=TrainConfig(max_epochs=1)))
        assert state.draw_size == 5
        assert len(state.accepted) == 5 and len(state.pool) == 95
        assert len(state.sample()) == 15
        np.testing.assert_array_equal(state.p, np.full(95, 1 / 95))
        assert not np.intersect1d(state.pool, state.accepted).size

    def test_deterministic(self):
        S = blobs(10, 100)
        cfg = MoodsConfig(train=TrainConfig(max_epochs=1), seed=3)
        a, b = initialize(S, S, cfg), initialize(S, S, cfg)
        np.testing.assert_array_equal(a.accepted, b.accepted)
        assert a.sample().equals(b.sample())

    def test_too_few_minority(self):
        with pytest.raises(InitializationError):
            initialize(blobs(1, 10), blobs(2, 2), MoodsConfig())

    def test_pool_smaller_than_m0(self):
        with pytest.raises(InitializationError):
            initialize(blobs(10, 4), blobs(2, 2), MoodsConfig())

    def test_scores_in_unit_interval(self):
        S = blobs(10, 60)
        state = initialize(S, S, MoodsConfig(train=FAST))
        assert 0 <= state.best_f1 <= 1 and 0 <= state.best_f1_minority <= 1


def bare_state(p, seed=0):
    S = blobs(4, len(p) + 2)
    majority = np.flatnonzero(S.y == 0)
    return sampler.SamplerState(
        train=S, minority=np.flatnonzero(S.y == 1), accepted=majority[:2], synthetic=np.empty((0, 2)),
        pool=majority[2:], p=np.asarray(p, dtype=float), draw_size=1, best_f1=0.5, best_f1_minority=0.5,
        model=None, seed=seed)


class TestDraw:
    def test_exhaustive(self):
        state = bare_state(np.full(6, 1 / 6))
        np.testing.assert_array_equal(weighted_majority_draw(state, 6), np.arange(6))

    def test_zero_mass_never_drawn(self):
        state = bare_state([0.2, 0.0, 0.3, 0.5])
        rng = np.random.default_rng(0)
        for _ in range(10_000):
            assert 1 not in weighted_majority_draw(state, 2, rng)

    def test_frequencies_within_three_sigma(self):
        p = np.array([0.5, 0.25, 0.25])
        state = bare_state(p)
        rng = np.random.default_rng(1)
        n = 100_000
        counts = np.bincount([weighted_majority_draw(state, 1, rng)[0] for _ in range(n)], minlength=3)
        sigma = np.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts - n * p) < 3 * sigma)

    def test_unnormalized_weights(self):
        # only ratios matter
        a = weighted_majority_draw(bare_state([2.0, 1.0, 1.0]), 2, np.random.default_rng(5))
        b = weighted_majority_draw(bare_state([0.5, 0.25, 0.25]), 2, np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)

    def test_exhausted(self):
        with pytest.raises(DrawExhausted):
            weighted_majority_draw(bare_state([0.5, 0.0, 0.5]), 3)

    def test_deterministic_per_step(self):
        state = bare_state(np.full(20, 0.05), seed=9)
        a = weighted_majority_draw(state, 4)
        assert np.array_equal(a, weighted_majority_draw(state, 4))
        later = replace(state, iteration=1)
        assert not np.array_equal(a, weighted_majority_draw(later, 4))


class TestPropose:
    @pytest.mark.parametrize("n_min,n_maj,expected", [(10, 11, 1), (10, 5, 0), (10, 10, 0)])
    def test_synthetic_count(self, n_min, n_maj, expected):
        assert synthetic_count(n_min, n_maj) == expected

    def test_balanced_after_top_up(self):
        S = blobs(6, 60, sep=1.0)
        state = initialize(S, S, MoodsConfig(train=TrainConfig(max_epochs=1)))
        state = replace(state, draw_size=8)
        prop = propose(state, MoodsConfig())
        c = prop.candidate
        assert c.n_majority == 3 + 8
        assert c.n_minority == c.n_majority
        assert prop.n_new_synthetic == 5
        assert np.all(c.is_synthetic == (c.index < 0))


def scripted(monkeypatch, scores):
    """Make `evaluate` return the given (F1, F1_m) pairs in order."""
    it = iter(scores)

    def fake(candidate, D_v, cfg):
        f1, f1m = next(it)
        return f1, f1m, "model", None

    monkeypatch.setattr(sampler, "evaluate", fake)


@pytest.fixture
def start():
    S = blobs(10, 100, sep=1.0, seed=2)
    cfg = MoodsConfig(train=TrainConfig(max_epochs=1), seed=1)
    state = initialize(S, S, cfg)
    return replace(state, best_f1=0.6, best_f1_minority=0.4), S, cfg


class TestStep:
    def test_accept(self, monkeypatch, start):
        state, S, cfg = start
        scripted(monkeypatch, [(0.61, 0.41)])
        new, rec = step(state, S, cfg)
        assert rec.decision == ACCEPTED
        assert len(new.pool) == len(state.pool) - state.draw_size
        assert len(new.accepted) == len(state.accepted) + state.draw_size
        assert new.draw_size == state.draw_size + 1 and new.k == 1
        assert (new.best_f1, new.best_f1_minority) == (0.61, 0.41)
        assert not np.intersect1d(new.pool, new.accepted).size
        assert len(new.p) == len(new.pool)

    @pytest.mark.parametrize("scores", [(0.7, 0.4), (0.6, 0.5), (0.5, 0.5), (0.6, 0.4)])
    def test_reject_needs_strict_improvement_of_both(self, monkeypatch, start, scores):
        state, S, cfg = start
        scripted(monkeypatch, [scores])
        _, rec = step(state, S, cfg)
        assert rec.decision == REJECTED

    def test_reject_halves_drawn_weights_only(self, monkeypatch, start):
        state, S, cfg = start
        slots = weighted_majority_draw(state, state.draw_size)
        scripted(monkeypatch, [(0.0, 0.0)])
        new, rec = step(state, S, cfg)
        expected = state.p.copy()
        expected[slots] = state.p[slots] / 2
        np.testing.assert_array_equal(new.p, expected)
        np.testing.assert_array_equal(new.pool, state.pool)
        np.testing.assert_array_equal(new.accepted, state.accepted)
        np.testing.assert_array_equal(new.synthetic, state.synthetic)
        assert (new.best_f1, new.best_f1_minority, new.k) == (state.best_f1, state.best_f1_minority, state.k)
        assert new.draw_size == state.draw_size - 1
        assert new.rejection_streak == 1 and new.iteration == 1

    def test_draw_size_floor(self, monkeypatch, start):
        state, S, cfg = start
        state = replace(state, draw_size=1)
        scripted(monkeypatch, [(0.0, 0.0)])
        new, _ = step(state, S, cfg)
        assert new.draw_size == 1

    def test_state_not_mutated(self, monkeypatch, start):
        state, S, cfg = start
        p = state.p.copy()
        scripted(monkeypatch, [(0.0, 0.0)])
        step(state, S, cfg)
        np.testing.assert_array_equal(state.p, p)


class TestEvaluate:
    def test_idempotent_and_matches_confusion(self):
        S = blobs(8, 40, seed=5)
        cfg = MoodsConfig(train=FAST, seed=2)
        a = evaluate(S, S, cfg)
        b = evaluate(S, S, cfg)
        assert a[:2] == b[:2] and a[2].equals(b[2])
        pred = classify(forward(a[2], S.X))
        r = f1_scores(confusion_from_predictions(S.y, pred))
        assert (a[0], a[1]) == (r.f1, r.f1_minority)

    def test_separable(self):
        S = blobs(10, 10, sep=8.0, seed=1)
        f1, f1m, _, _ = evaluate(S, S, MoodsConfig(train=TrainConfig(grad_tol=1e-2, max_epochs=300)))
        assert f1 == 1.0 and f1m == 1.0


class TestRun:
    def test_accepted_trace_strictly_decreasing(self, fixture_run):
        res, _ = fixture_run
        acc = res.accepted_trace
        assert len(acc) >= 3  # initial row plus at least two accepted steps
        for prev, cur in zip(acc, acc[1:]):
            assert cur.one_minus_f1 < prev.one_minus_f1
            assert cur.one_minus_f1_minority < prev.one_minus_f1_minority
        assert all(0 <= r.one_minus_f1 <= 1 and 0 <= r.one_minus_f1_minority <= 1 for r in res.trace)

    def test_real_points_conserved(self, fixture_run, fixture_split):
        res, _ = fixture_run
        S, train = res.sample, fixture_split.train
        real = S.index[~S.is_synthetic]
        assert len(np.unique(real)) == len(real)
        assert set(real) <= set(train.index)
        lookup = {idx: i for i, idx in enumerate(train.index)}
        np.testing.assert_array_equal(S.X[~S.is_synthetic], train.X[[lookup[i] for i in real]])
        assert set(train.index[train.y == 1]) <= set(real)
        assert not np.intersect1d(res.state.pool, res.state.accepted).size

    def test_synthetic_from_last_accepted_step(self, fixture_run):
        res, _ = fixture_run
        last = res.accepted_trace[-1]
        assert res.sample.is_synthetic.sum() == last.n_synthetic
        assert res.sample.n_minority == res.sample.n_majority or last.n_synthetic == 0

    def test_deterministic(self, fixture_run, fixture_split):
        res, cfg = fixture_run
        again = run(fixture_split, cfg)
        assert again.sample.equals(res.sample)
        assert again.trace == res.trace
        assert again.model.equals(res.model)

    def test_stops(self, fixture_run):
        res, cfg = fixture_run
        assert res.stop_reason in ("max_iter", "patience", "pool_exhausted", "perfect_validation")
        assert len(res.trace) - 1 <= cfg.max_iter

    def test_pool_exhaustion(self):
        # 6 minority -> M_0 = 3 leaves a pool of 1, too small for the first draw of 3
        train = blobs(6, 4, sep=0.5, seed=7)
        res = run(plain_split(train), MoodsConfig(train=FAST))
        assert res.stop_reason == "pool_exhausted"
        assert [r.decision for r in res.trace] == ["initial"]
        assert len(res.sample) == 9

    def test_trace_round_trip(self, fixture_run, tmp_path):
        res, _ = fixture_run
        path = write_trace(res.trace, tmp_path / "trace.csv")
        assert path.read_text().splitlines()[0] == ",".join(sampler.TRACE_COLUMNS)
        assert read_trace(path) == res.trace

    def test_sample_round_trip(self, fixture_run, fixture_split, tmp_path):
        res, _ = fixture_run
        path = save_sample(res.sample, tmp_path / "s.csv")
        prov = [line.split(",")[-2] for line in path.read_text().splitlines()[1:]]
        assert prov.count("synthetic") == res.sample.is_synthetic.sum()
        back = load_sample(path, fixture_split.train)
        assert back.equals(res.sample)
        np.testing.assert_array_equal(back.index, res.sample.index)


def test_build_sample_order():
    S = blobs(3, 5)
    syn = np.zeros((2, 2))
    out = build_sample(S, np.array([0, 1, 2]), np.array([4, 6]), syn)
    np.testing.assert_array_equal(out.index, [0, 1, 2, -1, -1, 4, 6])


@pytest.mark.parametrize("kw", [dict(max_iter=0), dict(patience=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        MoodsConfig(**kw)
