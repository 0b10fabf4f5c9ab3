"""Exception hierarchy shared by all polyreg modules."""


class PolyregError(Exception):
    """Base class for all errors raised by this package."""


class FormulaSyntaxError(PolyregError):
    """Raised by the formula parser; carries 1-based line/column."""

    def __init__(self, message, line, column):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class FlavorError(PolyregError):
    """MSO material used where only first-order logic is allowed."""


class EvalError(PolyregError):
    """Formula evaluation failed (uncovered free variable, bad arity, ...)."""


class SubsetCapExceeded(PolyregError):
    """Set quantification over a universe larger than the configured cap.

    Signals the caller to shrink the instance; MSO evaluation is by
    exhaustive subset enumeration and is exponential in the universe size.
    """


class BudgetExceeded(PolyregError):
    """A game/search exceeded its configured node budget."""


class SubstitutionError(PolyregError):
    """Arity mismatch or missing template during formula substitution."""


class OrderValidationError(PolyregError):
    """An order formula is not a linear order on the realized universe."""


class LabelConflictError(PolyregError):
    """A universe tuple satisfies zero or at least two label formulas."""


class ProgramSyntaxError(PolyregError):
    """Raised by the for-program parser; carries 1-based line/column."""

    def __init__(self, message, line, column):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ScopeError(PolyregError):
    """A for-program reads a variable that is not in scope."""


class ModeError(PolyregError):
    """A for-program mixes output kinds or is run in the wrong mode."""


class RepeatedTupleError(PolyregError):
    """A tuple enumerator emitted the same tuple twice (program defect)."""


class NoAcceptingRunError(PolyregError):
    """A rational transducer has no accepting run on the input."""


class AmbiguousRunError(PolyregError):
    """A rational transducer has two or more accepting runs on the input."""


class AlphabetMismatchError(PolyregError):
    """Adjacent pipeline stages disagree on their alphabets."""


class NonAperiodicError(PolyregError):
    """A construction requires an aperiodic semigroup and got one that is not."""


class ClosureCapExceeded(PolyregError):
    """Type-monoid discovery exceeded the configured element cap."""


class DominationInconsistency(PolyregError):
    """The pairwise domination tournament is not a total order.

    For a genuine quantifier-free linear order this cannot happen; it is
    reported for diagnosis instead of being silently repaired.
    """
