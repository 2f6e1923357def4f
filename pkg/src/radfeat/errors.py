"""Exception hierarchy shared by all modules."""


class RadfeatError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(RadfeatError, ValueError):
    pass


class DataError(RadfeatError, ValueError):
    """Input data is unusable (bad file, mismatched geometry, ...)."""


class EmptyRoiError(DataError):
    def __init__(self, msg="region of interest is empty", stage=None):
        self.stage = stage
        if stage:
            msg = f"{msg} (stage: {stage})"
        super().__init__(msg)


class MalformedContourError(DataError):
    pass


class DomainError(DataError):
    pass


class DegenerateGeometryError(RadfeatError, ArithmeticError):
    pass


class ManifoldError(RadfeatError):
    """Mesh is not a closed, consistently oriented 2-manifold."""


class UnsupportedFormatError(DataError):
    pass


class TruncatedFileError(DataError):
    pass


class InvariantError(RadfeatError, AssertionError):
    """Internal consistency check failed."""


class DimensionMismatchError(DataError):
    """Image and mask (or header and payload) disagree on dimensions."""
