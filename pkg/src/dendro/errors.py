"""Shared exception types."""


class DendroError(Exception):
    """Base class for all library errors."""


class WrongVariant(DendroError):
    """Operation applied to a tree whose variant does not support it."""


class LeafNotFound(DendroError):
    """Grafting or capping referenced an edge that is not a leaf."""


class NotInnerEdge(DendroError):
    """Contraction requested at an edge that is not contractible."""


class InvalidStructure(DendroError):
    """Raw data does not satisfy the structural invariants."""


class CompositionMismatch(DendroError):
    """Attempt to compose maps whose middle objects disagree."""


class WindowTooSmall(DendroError):
    """A truncation window does not contain the objects a computation needs."""


class BudgetExceeded(DendroError):
    """An enumeration exceeded its configured size or count budget."""
