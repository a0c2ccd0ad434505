"""Exception types shared across the toolkit."""


class RecolorError(Exception):
    """Base class for all errors raised by this package."""


class RasterFormatError(RecolorError, ValueError):
    """A PPM/PGM file is malformed or uses an unsupported variant."""


class DimensionMismatchError(RecolorError, ValueError):
    """Rasters or grids that must share dimensions do not."""


class InsufficientDataError(RecolorError, ValueError):
    """Too few samples to run an estimation."""


class DegenerateDataError(RecolorError, ValueError):
    """Samples carry no usable spread (e.g. all abscissas identical)."""


class NoSeedError(RecolorError, ValueError):
    """No known-color pixel is available to seed the decomposition."""


class OutOfRangeError(RecolorError, ValueError):
    """A value lies outside the range on which an inverse is defined."""


class ParameterError(RecolorError, ValueError):
    """A configuration value violates its documented constraints."""


class DivergenceError(RecolorError, RuntimeError):
    """An explicit scheme produced non-finite or runaway values.

    ``iteration`` is the first sweep at which the blow-up was detected.
    """

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration
