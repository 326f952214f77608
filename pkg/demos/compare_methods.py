"""
Comparing resampling methods on Ecoli
=====================================

Every method sees the same five train/validation/test splits, so the
rows of the table differ only in how the training set was resampled.
Published scores of methods not rerun here are appended for context.
Writes per-method run files and histogram CSVs under ``out/``. Takes
about half a minute.
"""
import sys

from moods.harness import ExperimentConfig, compare_methods, render_comparison
from moods.metrics import epsilon_delta_check

out = sys.argv[1] if len(sys.argv) > 1 else "out"
methods = ("none", "smote", "svm_smote", "moods")
cfgs = [ExperimentConfig(dataset="ecoli", method=m, out=f"{out}/{m}") for m in methods]
rows, results = compare_methods(cfgs, out=out, include_literature=True)
print(render_comparison(rows))

# %%
# The eps/delta verdict asks whether resampling pulled the minority class
# off the majority side of the network output by at least eps percentage
# points, while spreading the outputs by at least delta orders of magnitude.
eps, delta = 50.0, 0.5
for res in results:
    verdicts = [epsilon_delta_check(r.diversification, eps, delta) for r in res.runs if r.ok]
    print(f"{res.config.method:<10} eps={eps:g}, delta={delta:g}: {sum(verdicts)}/{len(verdicts)} runs pass")
