"""Multi-objective accept/reject resampling for imbalanced binary classification."""
