"""Exception hierarchy shared across the library."""


class RankHashError(Exception):
    """Base class for all library errors."""


class ParameterError(RankHashError, ValueError):
    """Invalid hashing or experiment parameters (n, m, k, p, seeds, grids)."""


class DimensionError(RankHashError, ValueError):
    """Vector length does not match the declared feature dimension."""


class SeedReuseError(RankHashError, ValueError):
    """A reissue was requested with the seed of the code being replaced."""


class IncompatibleTemplateError(RankHashError, ValueError):
    """Two hashed codes cannot be scored against each other.

    Raised when lengths differ or the codes were produced under different
    parameter sets / master seeds and cross-seed scoring was not explicitly
    requested.
    """


class DataError(RankHashError, ValueError):
    """Malformed input data (CSV rows, stores, config files)."""
