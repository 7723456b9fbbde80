"""Exception hierarchy shared across the toolkit.

Data/config problems raise subclasses of NkpcError so the CLI can map them
to exit code 2; anything else is an internal error (exit 1).
"""


class NkpcError(Exception):
    """Base class for all toolkit errors."""


# --- data frame ---------------------------------------------------------

class DuplicateIndex(NkpcError):
    pass


class UnsortedIndex(NkpcError):
    pass


class ParseError(NkpcError):
    def __init__(self, row, column, message=""):
        self.row = row
        self.column = column
        super().__init__(message or f"unparseable cell at row {row}, column {column!r}")


class DivisionDomain(NkpcError):
    pass


class InsufficientHistory(NkpcError):
    pass


class DegenerateColumn(NkpcError):
    pass


class MissingColumn(NkpcError):
    pass


# --- models -------------------------------------------------------------

class SingularDesign(NkpcError):
    def __init__(self, columns, message=""):
        self.columns = list(columns)
        super().__init__(message or f"near-collinear design columns: {self.columns}")


class ConvergenceFailure(NkpcError):
    def __init__(self, delta, message=""):
        self.delta = delta
        super().__init__(message or f"coordinate descent did not converge (last delta {delta:.3e})")


class EstimationFailure(NkpcError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


# --- evaluation ---------------------------------------------------------

class LengthMismatch(NkpcError):
    pass


class DegenerateBaseline(NkpcError):
    pass


class NotEnoughModels(NkpcError):
    pass


class WindowTooLarge(NkpcError):
    pass


class DegenerateVariance(NkpcError):
    pass


class EmptySplit(NkpcError):
    pass


# --- explain ------------------------------------------------------------

class DegenerateFeature(NkpcError):
    pass


class TooManyFeaturesForExact(NkpcError):
    pass


# --- conformal ----------------------------------------------------------

class ScaleDomain(NkpcError):
    pass


class ColdStart(NkpcError):
    pass


# --- cli ----------------------------------------------------------------

class ConfigError(NkpcError):
    pass
