"""Exception hierarchy.

Each top-level category carries the process exit code the CLI returns for it.
"""


class CodaBankruptcyError(Exception):
    exit_code = 1


class ConfigError(CodaBankruptcyError):
    """Bad flags, missing columns, invalid parameter values."""

    exit_code = 2


class DataError(CodaBankruptcyError):
    """Input data that cannot support the requested analysis."""

    exit_code = 3


class NumericError(CodaBankruptcyError):
    """A numerical procedure failed (singular design, no convergence)."""

    exit_code = 4


class ImputationError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class RankDeficiencyError(NumericError):
    def __init__(self, dependent_columns):
        self.dependent_columns = list(dependent_columns)
        super().__init__(
            "rank-deficient design; linearly dependent columns: "
            + ", ".join(self.dependent_columns)
        )


class PlrGraphError(ConfigError):
    """A pairwise log-ratio edge set that is not a spanning tree was used."""
