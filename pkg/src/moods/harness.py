"""Multi-seed experiments: baselines, MOODS, reports and figure data.

Every run ``i`` uses seed ``base_seed + i`` for its split, network
initialization, batch order and sampling, so all files written by
:func:`run_experiment` are reproducible byte for byte. Wall-clock timings
are logged but never written to disk for that reason.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import time
import traceback
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .dataset import (BUNDLED, DEFAULT_FRACTIONS, Dataset, DataSplit, bundled_manifest,
                      class_partition, concat, load_manifest, split, standardize)
from .metrics import (ConfusionCounts, DiversificationReport, F1Report, diversification_report, evaluate_f1,
                      z_histogram)
from .model import ModelState, TrainConfig, init_model, load_checkpoint, save_checkpoint, train
from .oversample import SmoteConfig, smote_generate, svm_smote_generate
from .sampler import MoodsConfig, load_sample, read_trace, run as run_moods, save_sample, write_trace

log = logging.getLogger(__name__)

METHODS = ("none", "smote", "svm_smote", "moods")

# Inner-loop stopping rule for experiments. A full-batch gradient norm of 0.4
# stops training on the raw imbalanced sets after a handful of epochs, where
# the network still predicts the majority class everywhere, while balanced
# candidate sets keep training much longer.
EXPERIMENT_TRAIN = TrainConfig(grad_tol=0.4, max_epochs=200)
SUMMARY_METRICS = ("f1", "f1_minority", "f1_majority", "overlap_decrease", "var_order_avg", "balance")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    method: str = "moods"
    n_runs: int = 5
    seed: int = 0
    fractions: tuple = DEFAULT_FRACTIONS
    train: TrainConfig = EXPERIMENT_TRAIN
    smote: SmoteConfig = SmoteConfig()
    max_iter: int = 200
    patience: int = 20
    bins: int = 30
    out: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))

    def manifest_path(self) -> Path:
        """`dataset` is a manifest path or the name of a bundled benchmark."""
        if self.dataset in BUNDLED and not Path(self.dataset).exists():
            return bundled_manifest(self.dataset)
        return Path(self.dataset)

    def to_dict(self, include_out=True):
        d = asdict(self)
        d["fractions"] = list(self.fractions)
        if not include_out:
            d.pop("out")
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "train" in d:
            d["train"] = replace(EXPERIMENT_TRAIN, **d["train"])
        if "smote" in d:
            d["smote"] = replace(SmoteConfig(), **d["smote"])
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path, **overrides):
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(d)


@dataclass(eq=False)
class RunResult:
    run: int
    seed: int
    method: str
    test: F1Report | None = None
    diversification: DiversificationReport | None = None
    sample_size: int = 0
    n_synthetic: int = 0
    stop_reason: str | None = None
    trace: list | None = None
    duration: float = 0.0
    error: str | None = None
    # in-memory only
    split: DataSplit | None = field(default=None, repr=False)
    baseline: ModelState | None = field(default=None, repr=False)
    model: ModelState | None = field(default=None, repr=False)
    sample: Dataset | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self):
        d = {
            "run": self.run,
            "seed": self.seed,
            "method": self.method,
            "error": self.error,
        }
        if self.ok:
            d.update(
                test=self.test.to_dict(),
                diversification=self.diversification.to_dict(),
                sample_size=self.sample_size,
                n_synthetic=self.n_synthetic,
                stop_reason=self.stop_reason,
                n_steps=None if self.trace is None else len(self.trace) - 1,
            )
        return d


@dataclass(eq=False)
class ExperimentResult:
    config: ExperimentConfig
    runs: list
    summary: dict


def _balanced_with(train_set: Dataset, synthetic: Dataset) -> Dataset:
    return concat([train_set, synthetic])


def apply_method(method, s: DataSplit, cfg: ExperimentConfig, seed):
    """Resample ``s.train`` with `method`; returns ``(sample, model, moods_result)``."""
    if method == "none":
        return s.train, None, None
    tc = replace(cfg.train, seed=seed)
    fresh = init_model(s.train.n_features, seed)
    if method in ("smote", "svm_smote"):
        minority, majority = class_partition(s.train)
        count = len(majority) - len(minority)
        if method == "smote":
            k = min(cfg.smote.k_neighbors, len(minority) - 1)
            syn = smote_generate(minority, count, k=k, seed=seed)
        else:
            syn = svm_smote_generate(s.train, count, cfg.smote, seed=seed)
        sample = _balanced_with(s.train, syn)
        return sample, train(fresh, sample, tc), None
    mc = MoodsConfig(max_iter=cfg.max_iter, patience=cfg.patience, train=tc, smote=cfg.smote, seed=seed)
    res = run_moods(s, mc)
    return res.sample, res.model, res


def run_single(cfg: ExperimentConfig, i: int, dataset: Dataset | None = None) -> RunResult:
    seed = cfg.seed + i
    result = RunResult(run=i, seed=seed, method=cfg.method)
    t0 = time.perf_counter()
    try:
        dataset = dataset if dataset is not None else load_manifest(cfg.manifest_path()).load()
        s = standardize(split(dataset, cfg.fractions, seed))
        tc = replace(cfg.train, seed=seed)
        baseline = train(init_model(dataset.n_features, seed), s.train, tc)
        sample, model, moods = apply_method(cfg.method, s, cfg, seed)
        if model is None:
            model = baseline
        result.test = evaluate_f1(model, s.test)
        result.diversification = diversification_report(baseline, s.train, model, sample)
        result.sample_size = len(sample)
        result.n_synthetic = int(sample.is_synthetic.sum())
        if moods is not None:
            result.trace = moods.trace
            result.stop_reason = moods.stop_reason
        result.split, result.baseline, result.model, result.sample = s, baseline, model, sample
    except Exception as exc:  # one failed run must not sink the experiment
        result.error = f"{type(exc).__name__}: {exc}"
        log.error("run %d failed:\n%s", i, traceback.format_exc())
    result.duration = time.perf_counter() - t0
    log.info("run %d (%s, seed %d) finished in %.1fs", i, cfg.method, seed, result.duration)
    return result


def summarize(runs) -> dict:
    """Mean and sample variance (zero for a single run) of each headline metric over successful runs."""
    ok = [r for r in runs if r.ok]
    values = {
        "f1": [r.test.f1 for r in ok],
        "f1_minority": [r.test.f1_minority for r in ok],
        "f1_majority": [r.test.f1_majority for r in ok],
        "overlap_decrease": [r.diversification.overlap_decrease for r in ok],
        "var_order_avg": [r.diversification.var_order_avg for r in ok],
        "balance": [r.diversification.balance for r in ok],
    }
    out = {"n_runs": len(runs), "n_ok": len(ok), "failed": [r.run for r in runs if not r.ok]}
    for name, v in values.items():
        v = np.asarray(v, dtype=np.float64)
        finite = v[np.isfinite(v)]
        out[name] = {
            "mean": float(v.mean()) if len(v) else None,
            "variance": (float(v.var(ddof=1)) if len(v) > 1 else 0.0) if len(finite) == len(v) and len(v) else None,
        }
    return out


def _dump(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n", encoding="utf-8")


def write_run(result: RunResult, cfg: ExperimentConfig, out: Path):
    i = result.run
    d = result.to_dict()
    d["dataset"] = cfg.dataset
    d["fractions"] = list(cfg.fractions)
    if result.ok:
        save_checkpoint(result.baseline, out / f"model_baseline_{i}")
        save_checkpoint(result.model, out / f"model_final_{i}")
        save_sample(result.sample, out / f"sample_{i}.csv")
        d["files"] = {
            "baseline_model": f"model_baseline_{i}.json",
            "final_model": f"model_final_{i}.json",
            "sample": f"sample_{i}.csv",
        }
        d["files"].update(export_figures(result, out, bins=cfg.bins))
    _dump(d, out / f"run_{i}.json")


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """All runs of one method on one dataset, plus the aggregate summary.

    With ``cfg.out`` set, writes ``run_<i>.json``, checkpoints, the final
    sample, ``hist_baseline_<i>.csv``/``hist_final_<i>.csv``,
    ``trace_<i>.csv`` (MOODS only) and ``summary.json``.
    """
    dataset = load_manifest(cfg.manifest_path()).load()
    runs = [run_single(cfg, i, dataset) for i in range(cfg.n_runs)]
    summary = {"config": cfg.to_dict(include_out=False), "runs": [r.to_dict() for r in runs]}
    summary.update(summarize(runs))
    if cfg.out is not None:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        for r in runs:
            write_run(r, cfg, out)
        _dump(summary, out / "summary.json")
    return ExperimentResult(cfg, runs, summary)


def export_figures(result: RunResult, out, bins=30) -> dict:
    """Write z histograms for the baseline and final models, and the MOODS trace.

    Returns the written file names keyed by role.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    i = result.run
    files = {}
    z_histogram(result.baseline, result.split.train, bins).to_csv(out / f"hist_baseline_{i}.csv")
    files["hist_baseline"] = f"hist_baseline_{i}.csv"
    z_histogram(result.model, result.sample, bins).to_csv(out / f"hist_final_{i}.csv")
    files["hist_final"] = f"hist_final_{i}.csv"
    if result.trace is not None:
        write_trace(result.trace, out / f"trace_{i}.csv")
        files["trace"] = f"trace_{i}.csv"
    return files


def load_run(out, i) -> RunResult:
    """Rebuild a finished run from its files (split, checkpoints, sample, trace)."""
    out = Path(out)
    d = json.loads((out / f"run_{i}.json").read_text(encoding="utf-8"))
    if d.get("error"):
        raise ValueError(f"run {i} failed: {d['error']}")
    cfg = ExperimentConfig(dataset=d["dataset"], method=d["method"], fractions=tuple(d["fractions"]))
    dataset = load_manifest(cfg.manifest_path()).load()
    s = standardize(split(dataset, cfg.fractions, d["seed"]))
    files = d["files"]
    result = RunResult(run=i, seed=d["seed"], method=d["method"], split=s)
    result.baseline = load_checkpoint(out / files["baseline_model"])
    result.model = load_checkpoint(out / files["final_model"])
    result.sample = load_sample(out / files["sample"], s.train)
    if "trace" in files:
        result.trace = read_trace(out / files["trace"])
    result.test = F1Report(**{**d["test"], "counts": ConfusionCounts(**d["test"]["counts"])})
    result.diversification = DiversificationReport(**d["diversification"])
    result.sample_size = d["sample_size"]
    result.n_synthetic = d["n_synthetic"]
    result.stop_reason = d["stop_reason"]
    return result


# ---------------------------------------------------------------------------
# Method comparison
# ---------------------------------------------------------------------------

COMPARISON_COLUMNS = ("method", "source", "f1", "f1_minority", "f1_majority", "overlap_decrease", "var_order_avg")


def literature_values() -> dict:
    """Published test scores of methods that are not rerun here (literature values)."""
    text = (resources.files("moods") / "data" / "literature.json").read_text(encoding="utf-8")
    return json.loads(text)


def comparison_rows(results, include_literature=False) -> list:
    if not results:
        raise ValueError("nothing to compare")
    names = {Path(r.config.dataset).stem if r.config.dataset not in BUNDLED else r.config.dataset
             for r in results}
    keys = {(r.config.dataset, r.config.seed, r.config.n_runs, r.config.fractions) for r in results}
    if len(keys) != 1:
        raise ValueError("all experiments must share dataset, seed, number of runs and split fractions")
    rows = []
    for r in results:
        s = r.summary
        rows.append({
            "method": r.config.method,
            "source": "measured",
            **{m: s[m]["mean"] for m in ("f1", "f1_minority", "f1_majority", "overlap_decrease", "var_order_avg")},
        })
    if include_literature:
        (name,) = names
        for method, vals in literature_values().get(name, {}).items():
            rows.append({"method": method, "source": "literature",
                         **{c: vals.get(c) for c in COMPARISON_COLUMNS[2:]}})
    return rows


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.2f}"
    return str(v)


def render_comparison(rows) -> str:
    cells = [list(COMPARISON_COLUMNS)] + [[_fmt(r[c]) for c in COMPARISON_COLUMNS] for r in rows]
    widths = [max(len(row[j]) for row in cells) for j in range(len(COMPARISON_COLUMNS))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells) + "\n"


def write_comparison(rows, out) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "comparison.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=COMPARISON_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: (repr(r[c]) if isinstance(r[c], float) else r[c]) for c in COMPARISON_COLUMNS})
    (out / "comparison.txt").write_text(render_comparison(rows), encoding="utf-8")
    return out / "comparison.csv"


def compare_methods(cfgs, out=None, include_literature=False):
    """Run each configuration and tabulate mean scores, one row per method."""
    cfgs = list(cfgs)
    if not cfgs:
        raise ValueError("empty configuration list")
    keys = {(c.dataset, c.seed, c.n_runs, c.fractions) for c in cfgs}
    if len(keys) != 1:
        raise ValueError("all experiments must share dataset, seed, number of runs and split fractions")
    results = [run_experiment(c) for c in cfgs]
    rows = comparison_rows(results, include_literature)
    if out is not None:
        write_comparison(rows, out)
    return rows, results
