"""Exception hierarchy shared by the whole package.

Each class carries the process exit code the CLI maps it to, so library
errors translate to stable shell semantics without a lookup table.
"""


class FairroundError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(FairroundError):
    """Malformed or out-of-contract input (bad index, bad schema, bad flag)."""

    exit_code = 2


class InfeasibleError(FairroundError):
    """A feasible solution provably does not exist for the request."""

    exit_code = 3


class DegenerateError(InfeasibleError):
    """Instance is degenerate for the requested objective (e.g. all-zero values)."""

    exit_code = 3


class CapacityError(FairroundError):
    """Exhaustive routine asked to run beyond its stated size cap."""

    exit_code = 4


class NumericError(FairroundError):
    """Numeric breakdown: overflow, non-finite intermediate, or runaway iteration."""

    exit_code = 5
