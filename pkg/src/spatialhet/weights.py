"""Sparse spatial weights: k-nearest neighbours, contiguity, distance bands."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .errors import DataError, SelfPair, UnknownId
from .frame import SpatialFrame

BINARY = "binary"
ROW_STANDARDIZED = "row_standardized"


@dataclass(frozen=True, eq=False)
class WeightsMatrix:
    """Neighbour structure with weights.

    Attributes
    ----------
    sparse : scipy.sparse.csr_array
        n x n matrix; row i holds the weights of i's neighbours.
    style : str
        ``"binary"`` or ``"row_standardized"``.
    islands : tuple of int
        Rows with no neighbours.
    ids : tuple of str, optional
        Unit ids in row order, used for export.
    """

    sparse: sparse.csr_array
    style: str = BINARY
    ids: tuple | None = None

    def __post_init__(self):
        m = sparse.csr_array(self.sparse, dtype=float)
        m.sort_indices()
        m.eliminate_zeros()
        if m.shape[0] != m.shape[1]:
            raise DataError("weights matrix must be square")
        if np.any(m.diagonal() != 0):
            raise DataError("self-neighbours are not allowed")
        if np.any(m.data < 0):
            raise DataError("weights must be nonnegative")
        object.__setattr__(self, "sparse", m)
        if self.ids is not None:
            object.__setattr__(self, "ids", tuple(self.ids))
            if len(self.ids) != m.shape[0]:
                raise DataError("ids length does not match the matrix")

    @property
    def n(self) -> int:
        return self.sparse.shape[0]

    @property
    def cardinalities(self) -> np.ndarray:
        return np.diff(self.sparse.indptr)

    @property
    def islands(self) -> tuple:
        return tuple(int(i) for i in np.flatnonzero(self.cardinalities == 0))

    @property
    def s0(self) -> float:
        """Sum of all weights."""
        return float(self.sparse.data.sum())

    @property
    def symmetric_structure(self) -> bool:
        pattern = (self.sparse != 0).astype(np.int8)
        return (pattern != pattern.T).nnz == 0

    @property
    def rows(self) -> list:
        """Per-unit list of ``(neighbour, weight)`` pairs."""
        out = []
        m = self.sparse
        for i in range(self.n):
            lo, hi = m.indptr[i], m.indptr[i + 1]
            out.append(list(zip(m.indices[lo:hi].tolist(), m.data[lo:hi].tolist())))
        return out

    def neighbors(self, i: int) -> np.ndarray:
        m = self.sparse
        return m.indices[m.indptr[i]:m.indptr[i + 1]]

    def row_weights(self, i: int) -> np.ndarray:
        m = self.sparse
        return m.data[m.indptr[i]:m.indptr[i + 1]]

    def dense(self) -> np.ndarray:
        return self.sparse.toarray()

    def lag(self, values) -> np.ndarray:
        return self.sparse @ np.asarray(values, dtype=float)

    def export(self, delimiter: str = ",") -> str:
        """``id, neighbour_id, weight`` triples sorted by id then neighbour id."""
        ids = self.ids if self.ids is not None else tuple(str(i) for i in range(self.n))
        triples = []
        for i, row in enumerate(self.rows):
            for j, w in row:
                triples.append((ids[i], ids[j], w))
        triples.sort(key=lambda t: (t[0], t[1]))
        buf = io.StringIO()
        writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
        writer.writerow(["id", "neighbour_id", "weight"])
        for a, b, w in triples:
            writer.writerow([a, b, repr(float(w))])
        return buf.getvalue()


def _from_pairs(n: int, rows: Sequence[int], cols: Sequence[int], ids) -> WeightsMatrix:
    data = np.ones(len(rows))
    m = sparse.coo_array((data, (np.asarray(rows, int), np.asarray(cols, int))), shape=(n, n)).tocsr()
    m.data[:] = 1.0  # duplicate pairs sum on conversion
    return WeightsMatrix(m, BINARY, ids)


def knn_indices(coords: np.ndarray, k: int, chunk: int = 512) -> np.ndarray:
    """Indices of the k nearest other points, ties broken by ascending index."""
    n = coords.shape[0]
    out = np.empty((n, k), dtype=int)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        d = np.sqrt(((coords[start:stop, None, :] - coords[None, :, :]) ** 2).sum(-1))
        d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        out[start:stop] = np.argsort(d, axis=1, kind="stable")[:, :k]
    return out


def build_knn(frame: SpatialFrame, k: int) -> WeightsMatrix:
    """Binary weights linking each unit to its ``k`` nearest neighbours.

    Distance ties (including coincident points) are broken by ascending unit
    index, so the result is deterministic.
    """
    n = frame.n
    if n < 2:
        raise DataError("k-nearest-neighbour weights need at least two units")
    if not (1 <= int(k) <= n - 1) or int(k) != k:
        raise DataError(f"k must be an integer in [1, {n - 1}], got {k}")
    k = int(k)
    nbrs = knn_indices(frame.coords, k)
    rows = np.repeat(np.arange(n), k)
    return _from_pairs(n, rows, nbrs.ravel(), frame.unit_ids)


def build_contiguity(frame: SpatialFrame, adjacency_pairs: Iterable[tuple]) -> WeightsMatrix:
    """Symmetric binary weights from an explicit list of adjacent id pairs."""
    index = {u: i for i, u in enumerate(frame.unit_ids)}
    rows, cols = [], []
    for a, b in adjacency_pairs:
        a, b = str(a), str(b)
        for u in (a, b):
            if u not in index:
                raise UnknownId(u)
        if a == b:
            raise SelfPair(a)
        rows += [index[a], index[b]]
        cols += [index[b], index[a]]
    return _from_pairs(frame.n, rows, cols, frame.unit_ids)


def build_distance_band(frame: SpatialFrame, radius: float) -> WeightsMatrix:
    """Binary weights with w_ij = 1 iff 0 < d_ij <= radius."""
    if not radius > 0:
        raise DataError(f"radius must be positive, got {radius}")
    d = frame.pairwise_distances()
    mask = (d > 0) & (d <= radius)
    rows, cols = np.nonzero(mask)
    return _from_pairs(frame.n, rows, cols, frame.unit_ids)


def row_standardize(W: WeightsMatrix) -> WeightsMatrix:
    """Divide each non-island row by its sum; island rows stay empty."""
    m = W.sparse.copy()
    sums = np.asarray(m.sum(axis=1)).ravel()
    counts = np.diff(m.indptr)
    sums = np.where(counts > 0, sums, 1.0)
    m.data = m.data / np.repeat(sums, counts)
    return WeightsMatrix(m, ROW_STANDARDIZED, W.ids)


def drop_islands(frame: SpatialFrame, W: WeightsMatrix):
    """Remove island units from both the frame and the weights.

    Returns
    -------
    frame, W, removed
        ``removed`` lists the dropped unit ids; row order of the survivors is
        preserved so new index = rank among the kept old indices.
    """
    if frame.n != W.n:
        raise DataError("frame and weights sizes differ")
    islands = W.islands
    if not islands:
        return frame, W, []
    if len(islands) == W.n:
        raise DataError("every unit is an island")
    keep = np.setdiff1d(np.arange(W.n), islands)
    m = W.sparse[keep][:, keep]
    removed = [frame.unit_ids[i] for i in islands]
    sub = frame.take(keep)
    return sub, WeightsMatrix(m, W.style, sub.unit_ids), removed


def read_adjacency(text: str, delimiter: str = ",") -> list:
    """Parse a two-column id-pair file; a header row of non-id labels is skipped if present."""
    pairs = []
    for r, row in enumerate(csv.reader(io.StringIO(text), delimiter=delimiter)):
        if not row:
            continue
        if len(row) < 2:
            raise DataError(f"adjacency row {r} needs two ids")
        pairs.append((row[0].strip(), row[1].strip()))
    return pairs


def grid_adjacency(ids: Sequence[str], n_rows: int, n_cols: int, queen: bool = False) -> list:
    """Adjacency pairs for a row-major lattice, rook (edge) or queen (edge or corner)."""
    offsets = [(0, 1), (1, 0)] + ([(1, 1), (1, -1)] if queen else [])
    pairs = []
    for r in range(n_rows):
        for c in range(n_cols):
            for dr, dc in offsets:
                rr, cc = r + dr, c + dc
                if 0 <= rr < n_rows and 0 <= cc < n_cols:
                    pairs.append((ids[r * n_cols + c], ids[rr * n_cols + cc]))
    return pairs
