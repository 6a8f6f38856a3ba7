"""Exception hierarchy shared across the package."""


class SpatialHetError(Exception):
    """Base class for all errors raised by spatialhet."""


class DataError(SpatialHetError):
    """Input data is malformed or violates a frame invariant."""


class EmptyTable(DataError):
    pass


class MissingColumn(DataError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column!r} not found")


class DuplicateId(DataError):
    def __init__(self, unit_id):
        self.unit_id = unit_id
        super().__init__(f"duplicate unit id {unit_id!r}")


class NonNumericCell(DataError):
    def __init__(self, row, column, value=None):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"non-numeric value {value!r} at row {row}, column {column!r}")


class GeographicCoordinates(DataError):
    """Coordinates look like latitude/longitude; projected meters are required."""


class ZeroDenominator(DataError):
    def __init__(self, unit):
        self.unit = unit
        super().__init__(f"denominator is zero or negative for unit {unit!r}")


class UnknownId(DataError):
    def __init__(self, unit_id):
        self.unit_id = unit_id
        super().__init__(f"unknown unit id {unit_id!r}")


class SelfPair(DataError):
    def __init__(self, unit_id):
        self.unit_id = unit_id
        super().__init__(f"adjacency pair links {unit_id!r} to itself")


class NumericalError(SpatialHetError):
    """A numerical procedure failed or its preconditions do not hold."""


class ZeroVariance(NumericalError):
    pass


class IslandsPresent(NumericalError):
    def __init__(self, islands):
        self.islands = list(islands)
        super().__init__(f"{len(self.islands)} island(s) present; call drop_islands first")


class RankDeficient(NumericalError):
    pass


class LocalRankDeficiency(RankDeficient):
    def __init__(self, location, condition_number):
        self.location = location
        self.condition_number = condition_number
        super().__init__(
            f"local design is rank deficient at location {location} "
            f"(local condition number {condition_number:.3g}); consider fit_lcr_gwr"
        )


class BoundaryOptimum(NumericalError):
    pass


class BisectionFailure(NumericalError):
    def __init__(self, location):
        self.location = location
        super().__init__(f"ridge bisection failed at location {location}")


class ConstantResponse(NumericalError):
    pass


class MixedResponses(SpatialHetError):
    pass


class ConfigError(SpatialHetError):
    pass
