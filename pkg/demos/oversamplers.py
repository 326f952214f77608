"""
SMOTE and SVM-SMOTE on a two-dimensional toy set
================================================

Both oversamplers add synthetic minority points until the classes are
balanced. SMOTE interpolates between any minority point and one of its
minority neighbours; SVM-SMOTE only starts from minority support vectors
that sit close to the majority class, so its points concentrate near the
decision boundary.
"""
import numpy as np

from moods.dataset import Dataset
from moods.oversample import danger_minority, smote_generate, svm_smote_generate
from moods.svm import fit_svm

rng = np.random.default_rng(0)
X = np.vstack([rng.normal(2.5, 0.8, size=(15, 2)), rng.normal(0.0, 1.0, size=(150, 2))])
S = Dataset(X, np.r_[np.ones(15, int), np.zeros(150, int)])
need = S.n_majority - S.n_minority

# %%
# The starting points of SVM-SMOTE: minority support vectors whose
# neighbourhoods contain majority points, but not only majority points.
svm = fit_svm(S, seed=0)
danger = danger_minority(S, svm)
print(f"{len(svm.support)} support vectors, {len(danger)} of {S.n_minority} minority points in danger")

# %%
# The absolute SVM decision value measures how far a point is from the
# fitted boundary. SVM-SMOTE points sit much closer to it on average.
minority = S.subset(np.flatnonzero(S.y == 1))
plain = smote_generate(minority, need, k=5, seed=0)
svm_based = svm_smote_generate(S, need, seed=0)
for name, out in (("SMOTE", plain), ("SVM-SMOTE", svm_based)):
    f = np.abs(svm.decision_function(out.X))
    print(f"{name:<9} {len(out)} points, mean |decision value| {f.mean():.2f}")
