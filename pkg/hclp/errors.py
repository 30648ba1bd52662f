from typing import Optional


class HclpError(ValueError):
    """Base class for all errors raised by the hclp package.

    Attributes:
        code: A stable, machine-readable error code.
        location: Where the error was found (a field path or line), if known.
    """

    code = "hclp-error"

    def __init__(self, message: str, location: Optional[str] = None) -> None:
        super().__init__(message)
        self.message = message
        self.location = location


class NameResolutionError(HclpError):
    """An alternative or evaluation name is not part of the cost table."""

    code = "unknown-name"


class InvalidTableError(HclpError):
    """A cost table violates its structural invariants."""

    code = "invalid-table"


class InvalidModelError(HclpError):
    """A model is not a valid ordered partition for the given table."""

    code = "invalid-model"


class PreconditionError(HclpError):
    """An operation was called on input outside its precondition."""

    code = "precondition-violation"


class SizeGuardError(HclpError):
    """The brute-force oracle refused an instance above its size cap."""

    code = "size-guard"


class ProblemParseError(HclpError):
    """A problem file could not be parsed.

    Unlike the other errors, the code depends on the failure (for example
    ``zero-denominator`` or ``missing-cost``).
    """

    def __init__(
        self, code: str, message: str, location: Optional[str] = None
    ) -> None:
        super().__init__(message, location)
        self.code = code


class QueryParseError(HclpError):
    """A query string does not match ``NAME (<=|<|==) NAME``."""

    code = "invalid-query"


class ReductionParameterError(HclpError):
    """The level-size bound passed to the 3-SAT reduction is below 2."""

    code = "parameter"


class CnfParseError(HclpError):
    """A DIMACS file is malformed or has a clause that is not 3-CNF."""

    code = "cnf-parse"


class IncompleteAssignmentError(HclpError):
    """A truth assignment does not cover every variable."""

    code = "incomplete-assignment"


class NotACountermodelError(HclpError):
    """A model does not satisfy the reduction's statements and ``beta < alpha``."""

    code = "not-a-countermodel"


class NamingError(HclpError):
    """A generated name collides with an existing alternative."""

    code = "name-collision"


class InvalidStatementError(HclpError):
    """A preference or ordering statement is structurally invalid."""

    code = "invalid-statement"


class ConfigurationError(HclpError):
    """An environment setting has a value the tool cannot use."""

    code = "configuration"
