"""Spatial weights and autocorrelation on the bundled 400-unit field.

Builds k-nearest-neighbour and rook contiguity weights, then asks whether
income clusters in space (global Moran's I and Geary's C) and where
(local Moran quadrants).
"""

import csv
from collections import Counter
from importlib import resources

from spatialhet import build_contiguity, build_knn, gearys_c, load_frame, local_morans_i, morans_i, row_standardize

data = resources.files("spatialhet") / "data"
frame = load_frame((data / "synthetic_400.csv").read_text(), "id", "easting", "northing")
pairs = list(csv.reader((data / "synthetic_400_adjacency.csv").read_text().splitlines()))[1:]

knn = row_standardize(build_knn(frame, 8))
rook = row_standardize(build_contiguity(frame, pairs))
print(f"{frame.n} units, knn(8) links {int(knn.cardinalities.sum())}, rook links {int(rook.cardinalities.sum())}")

for name, W in (("knn(8)", knn), ("rook", rook)):
    i = morans_i(frame["income"], W, n_permutations=999, seed=1)
    c = gearys_c(frame["income"], W, n_permutations=999, seed=1)
    print(f"{name:7s} I = {i.statistic:.3f} (p {i.pseudo_p:.3f})   C = {c.statistic:.3f} (p {c.pseudo_p:.3f})")

lisa = local_morans_i(frame["income"], knn, n_permutations=499, seed=2)
print("local Moran labels:", dict(sorted(Counter(lisa.labels).items())))
