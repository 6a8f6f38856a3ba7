"""Observation tables bound to planar point locations."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DataError,
    DuplicateId,
    EmptyTable,
    GeographicCoordinates,
    MissingColumn,
    NonNumericCell,
    ZeroDenominator,
)

_GEOGRAPHIC_NAMES = {"lat", "latitude", "lon", "long", "lng", "longitude"}


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpatialFrame:
    """Validated observation table with one planar location per unit.

    Parameters
    ----------
    unit_ids : sequence of str
        Unique identifiers, one per unit.
    coords : array_like, shape (n, 2)
        Projected coordinates in meters.
    columns : mapping of str to array_like
        Numeric attribute vectors of length n.
    """

    unit_ids: tuple
    coords: np.ndarray
    columns: Mapping[str, np.ndarray]
    duplicate_locations: tuple = ()

    def __init__(self, unit_ids: Sequence[str], coords, columns: Mapping[str, Sequence[float]] | None = None):
        ids = tuple(str(u) for u in unit_ids)
        if len(ids) == 0:
            raise EmptyTable("a SpatialFrame needs at least one unit")
        seen = set()
        for u in ids:
            if u in seen:
                raise DuplicateId(u)
            seen.add(u)
        xy = _frozen(coords)
        if xy.shape != (len(ids), 2):
            raise DataError(f"coords must have shape ({len(ids)}, 2), got {xy.shape}")
        if not np.all(np.isfinite(xy)):
            raise DataError("coordinates must be finite")
        cols = {}
        for name, values in (columns or {}).items():
            arr = _frozen(values)
            if arr.shape != (len(ids),):
                raise DataError(f"column {name!r} has length {arr.size}, expected {len(ids)}")
            if not np.all(np.isfinite(arr)):
                bad = int(np.flatnonzero(~np.isfinite(arr))[0])
                raise NonNumericCell(bad, name, arr[bad])
            cols[name] = arr
        object.__setattr__(self, "unit_ids", ids)
        object.__setattr__(self, "coords", xy)
        object.__setattr__(self, "columns", MappingProxyType(cols))
        object.__setattr__(self, "duplicate_locations", _duplicate_groups(xy))

    @property
    def n(self) -> int:
        return len(self.unit_ids)

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise MissingColumn(name) from None

    def column_names(self) -> list:
        return list(self.columns)

    def index_of(self, unit_id: str) -> int:
        return self.unit_ids.index(unit_id)

    def with_column(self, name: str, values) -> "SpatialFrame":
        cols = dict(self.columns)
        cols[name] = values
        return SpatialFrame(self.unit_ids, self.coords, cols)

    def take(self, indices) -> "SpatialFrame":
        """Return a new frame restricted to ``indices`` (in the given order)."""
        idx = np.asarray(indices, dtype=int)
        return SpatialFrame(
            [self.unit_ids[i] for i in idx],
            self.coords[idx],
            {k: v[idx] for k, v in self.columns.items()},
        )

    def pairwise_distances(self) -> np.ndarray:
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        return np.sqrt((diff ** 2).sum(axis=-1))

    def design(self, spec: "ModelSpec"):
        """Return ``(X, y, term_names)`` for a model specification."""
        spec.validate(self)
        y = np.asarray(self[spec.response], dtype=float)
        cols = [np.asarray(self[p], dtype=float) for p in spec.predictors]
        names = list(spec.predictors)
        if spec.include_intercept:
            cols.insert(0, np.ones(self.n))
            names.insert(0, "Intercept")
        X = np.column_stack(cols) if cols else np.empty((self.n, 0))
        return X, y, names

    def to_csv(self, delimiter: str = ",", id_column: str = "id", x_column: str = "x", y_column: str = "y") -> str:
        """Serialise to delimited text; floats are written with ``repr`` so they round-trip."""
        buf = io.StringIO()
        writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
        names = list(self.columns)
        writer.writerow([id_column, x_column, y_column, *names])
        for i, uid in enumerate(self.unit_ids):
            row = [uid, repr(float(self.coords[i, 0])), repr(float(self.coords[i, 1]))]
            row += [repr(float(self.columns[c][i])) for c in names]
            writer.writerow(row)
        return buf.getvalue()

    def to_geojson(self, extra: Mapping[str, Sequence] | None = None) -> dict:
        """FeatureCollection with one Point per unit and every column as a property."""
        features = []
        extra = extra or {}
        for i, uid in enumerate(self.unit_ids):
            props = {"id": uid}
            props.update({c: float(v[i]) for c, v in self.columns.items()})
            for key, values in extra.items():
                props[key] = _jsonable(values[i])
            features.append({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [float(self.coords[i, 0]), float(self.coords[i, 1])]},
                "properties": props,
            })
        return {"type": "FeatureCollection", "features": features}


def _jsonable(value):
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _duplicate_groups(xy: np.ndarray) -> tuple:
    groups = {}
    for i, (a, b) in enumerate(map(tuple, xy)):
        groups.setdefault((a, b), []).append(i)
    return tuple(tuple(g) for g in groups.values() if len(g) > 1)


@dataclass(frozen=True)
class ModelSpec:
    response: str
    predictors: tuple = ()
    include_intercept: bool = True

    def __post_init__(self):
        object.__setattr__(self, "predictors", tuple(self.predictors))
        if self.response in self.predictors:
            raise DataError(f"response {self.response!r} also listed as a predictor")
        if len(set(self.predictors)) != len(self.predictors):
            raise DataError("predictor names must be unique")

    @property
    def n_terms(self) -> int:
        return len(self.predictors) + int(self.include_intercept)

    def validate(self, frame: SpatialFrame, require_predictors: bool = False) -> None:
        for name in (self.response, *self.predictors):
            if name not in frame.columns:
                raise MissingColumn(name)
        if require_predictors and not self.predictors:
            raise DataError("at least one predictor is required")
        if self.n_terms == 0:
            raise DataError("model has no terms")


def load_frame(
    table_source: str,
    id_column: str,
    x_column: str,
    y_column: str,
    columns: Sequence[str] | None = None,
    delimiter: str = ",",
    allow_geographic: bool = False,
) -> SpatialFrame:
    """Parse delimited text into a validated :class:`SpatialFrame`.

    ``columns`` selects the data columns to keep (default: every column other
    than the id and coordinate columns). Rows with a missing or non-numeric
    value in any selected column are rejected; the raised
    :class:`NonNumericCell` names the first offending cell (0-based data row)
    and carries every problem in its ``report`` attribute.
    """
    reader = csv.reader(io.StringIO(table_source), delimiter=delimiter)
    rows = [r for r in reader if r]
    if not rows:
        raise EmptyTable("table has no header row")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise EmptyTable("table has a header but no data rows")
    for name in (id_column, x_column, y_column):
        if name not in header:
            raise MissingColumn(name)
    if not allow_geographic and {x_column.lower(), y_column.lower()} & _GEOGRAPHIC_NAMES:
        raise GeographicCoordinates(
            f"coordinate columns {x_column!r}/{y_column!r} look geographic; project to meters first"
        )
    if columns is None:
        columns = [h for h in header if h not in (id_column, x_column, y_column)]
    for name in columns:
        if name not in header:
            raise MissingColumn(name)
    pos = {h: j for j, h in enumerate(header)}

    problems = []
    ids, xy, data = [], [], {c: [] for c in columns}
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise DataError(f"row {r} has {len(row)} fields, header has {len(header)}")
        ids.append(row[pos[id_column]].strip())
        parsed = {}
        for name in (x_column, y_column, *columns):
            raw = row[pos[name]].strip()
            try:
                val = float(raw)
            except ValueError:
                val = math.nan
            if not math.isfinite(val):
                problems.append((r, name, raw))
            parsed[name] = val
        xy.append((parsed[x_column], parsed[y_column]))
        for c in columns:
            data[c].append(parsed[c])
    if problems:
        r, name, raw = problems[0]
        err = NonNumericCell(r, name, raw)
        err.report = problems
        raise err
    return SpatialFrame(ids, xy, data)


def read_frame(path: str | os.PathLike, id_column: str, x_column: str, y_column: str, **kwargs) -> SpatialFrame:
    with open(path, encoding="utf-8", newline="") as fh:
        return load_frame(fh.read(), id_column, x_column, y_column, **kwargs)


def derive_share(frame: SpatialFrame, numerator: str, denominator: str, out: str) -> SpatialFrame:
    """Append ``out = 100 * numerator / denominator`` as a percentage column."""
    num = frame[numerator]
    den = frame[denominator]
    bad = np.flatnonzero(den <= 0)
    if bad.size:
        raise ZeroDenominator(frame.unit_ids[bad[0]])
    return frame.with_column(out, 100.0 * num / den)


def write_geojson(path: str | os.PathLike, collection: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(collection, fh, indent=1, sort_keys=False)
        fh.write("\n")
