"""Predictor screening: forest importance, correlation pruning, VIF filter.

Three signal columns among seven noise columns; one noise column is a
near copy of a signal column.
"""

import numpy as np

from spatialhet import ModelSpec, SpatialFrame, select_variables

rng = np.random.default_rng(0)
n = 500
X = rng.standard_normal((n, 10))
cols = {f"s{j + 1}": X[:, j] for j in range(3)}
cols.update({f"n{j + 1}": X[:, 3 + j] for j in range(7)})
cols["s1_copy"] = cols["s1"] + 0.1 * rng.standard_normal(n)
cols["y"] = 2.0 * cols["s1"] + 1.5 * cols["s2"] + cols["s3"] + rng.standard_normal(n)
frame = SpatialFrame([f"u{i}" for i in range(n)], rng.uniform(0, 1e4, (n, 2)), cols)

funnel = select_variables(frame, ModelSpec("y", [c for c in cols if c != "y"]), n_trees=300, seed=0)
print(funnel.report)
print("selected:", funnel.selected)
