"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line frontend:
2 for usage errors, 3 for data errors, 4 for numeric/degenerate errors.
"""


class DrDistError(Exception):
    exit_code = 3


# usage errors
class ConfigError(DrDistError):
    exit_code = 2


class NotFoundError(ConfigError):
    pass


class ParamError(ConfigError):
    def __init__(self, message, index=None, measure_id=None):
        self.index = index
        self.measure_id = measure_id
        if index is not None:
            message = f"spec[{index}] ({measure_id}): {message}"
        super().__init__(message)

    def tagged(self, index, measure_id):
        if self.index is not None:
            return self
        err = ParamError(str(self), index=index, measure_id=measure_id)
        err.__cause__ = self
        return err


class InputError(DrDistError):
    exit_code = 2


# data errors
class FormatError(DrDistError):
    pass


class NonFiniteError(DrDistError, ValueError):
    pass


class TooSmallError(DrDistError):
    pass


class ShapeError(DrDistError):
    pass


class DimensionError(ShapeError):
    pass


class MissingLabelsError(DrDistError):
    pass


class MissingBlockError(DrDistError):
    """A measure asked the cache for a block that was never computed."""


class IoError(DrDistError, OSError):
    pass


# numeric errors
class DegenerateInputError(DrDistError):
    exit_code = 4

    def __init__(self, message, indices=None):
        self.indices = indices
        super().__init__(message)


class DegenerateGeometryError(DegenerateInputError):
    pass
