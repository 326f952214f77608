"""
Resampling Ecoli with MOODS
===========================

Load the bundled Ecoli benchmark, split and standardize it, run the
sampler on the training part and score the result on the held-out test
part. Runs in well under a minute.
"""
import numpy as np

from moods.dataset import load_bundled, split, standardize
from moods.harness import EXPERIMENT_TRAIN
from moods.metrics import diversification_report, evaluate_f1
from moods.model import init_model, train
from moods.sampler import MoodsConfig, run

# %%
# The data: 336 points, 20 of them in the minority class.
data = load_bundled("ecoli")
print(f"{len(data)} points, {data.n_minority} minority, {data.n_features} features")

s = standardize(split(data, seed=0))
print(f"train {len(s.train)}, validation {len(s.validation)}, test {len(s.test)}")

# %%
# A network trained on the raw training set. With this few minority points
# it predicts the majority class everywhere.
baseline = train(init_model(data.n_features, seed=0), s.train, EXPERIMENT_TRAIN)
r = evaluate_f1(baseline, s.test)
print(f"raw training set: F1 {r.f1:.3f} (minority {r.f1_minority:.3f}, majority {r.f1_majority:.3f})")

# %%
# The sampler starts from half the minority points plus as many majority
# points, and grows the sample only when both validation scores improve.
result = run(s, MoodsConfig(train=EXPERIMENT_TRAIN, seed=0))
print(f"stopped on {result.stop_reason} after {len(result.trace) - 1} steps")
for r in result.accepted_trace:
    print(f"  step {r.step:>3}: 1-F1 {r.one_minus_f1:.3f}, 1-F1_min {r.one_minus_f1_minority:.3f}, size {r.size}")

# %%
# Test scores of the network trained on the selected sample, and how far
# apart the two classes sit on the network's output compared to the baseline.
r = evaluate_f1(result.model, s.test)
print(f"MOODS sample: F1 {r.f1:.3f} (minority {r.f1_minority:.3f}, majority {r.f1_majority:.3f})")
report = diversification_report(baseline, s.train, result.model, result.sample)
print(f"minority overlap {100 * report.overlap_before:.0f}% -> {100 * report.overlap_after:.0f}%")
print(f"variance order increase {report.var_order_avg:.2f}, balance {report.balance:.2f}")
print(f"synthetic points in the sample: {int(np.sum(result.sample.index < 0))}")
