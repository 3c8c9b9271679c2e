"""Exception hierarchy shared by every stage of the pipeline."""


class RemodError(Exception):
    """Base class for all errors raised by remodkit."""


class ParseError(RemodError, ValueError):
    """Input text could not be parsed.

    ``offset`` is a byte offset and ``line`` a 1-based line number, whichever
    the format makes meaningful.
    """

    def __init__(self, message, *, offset=None, line=None, column=None):
        super().__init__(message)
        self.offset = offset
        self.line = line
        self.column = column


class SchemaError(RemodError, ValueError):
    """Input parsed but violates the expected structure."""


class UnknownEntityError(RemodError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class InvariantError(RemodError, ValueError):
    """A domain invariant (e.g. partition disjointness) was violated."""


class UsageError(RemodError, ValueError):
    """Operation called outside its precondition."""


class CapacityError(RemodError):
    """Problem too large for an exact / exhaustive method."""


class UniverseError(RemodError, ValueError):
    """Two decompositions do not describe the same entity set."""

    def __init__(self, only_a, only_b):
        self.only_a = frozenset(only_a)
        self.only_b = frozenset(only_b)
        super().__init__(
            "decompositions cover different entities: "
            f"only in A={sorted(self.only_a)[:10]}, only in B={sorted(self.only_b)[:10]}"
        )


class NumericalError(RemodError, ArithmeticError):
    pass


class DegenerateLabelsError(RemodError, ValueError):
    """A classifier was asked to learn from a single class."""


class MissingCellError(RemodError, ValueError):
    def __init__(self, gaps):
        self.gaps = list(gaps)
        preview = ", ".join(f"{r}/{c}" for r, c in self.gaps[:5])
        super().__init__(f"{len(self.gaps)} missing performance cells: {preview}")
