"""Trees, tree categories, and lean dendroidal spaces."""

from .errors import (
    BudgetExceeded,
    CompositionMismatch,
    DendroError,
    InvalidStructure,
    LeafNotFound,
    NotInnerEdge,
    WindowTooSmall,
    WrongVariant,
)
from .trees import (
    CLOSED,
    GENERAL,
    OPEN,
    REDUCED_OPEN,
    SIZE,
    WEIGHT,
    Tree,
    Vertex,
    canonical_code,
    canonicalize,
    closure,
    contract_inner_edge,
    corolla,
    enumerate_trees,
    eta,
    graft,
    isomorphic,
    linear,
    reduce_tree,
    size,
    subtrees,
    weight,
)

__all__ = [
    "BudgetExceeded",
    "CompositionMismatch",
    "DendroError",
    "InvalidStructure",
    "LeafNotFound",
    "NotInnerEdge",
    "WindowTooSmall",
    "WrongVariant",
    "CLOSED",
    "GENERAL",
    "OPEN",
    "REDUCED_OPEN",
    "SIZE",
    "WEIGHT",
    "Tree",
    "Vertex",
    "canonical_code",
    "canonicalize",
    "closure",
    "contract_inner_edge",
    "corolla",
    "enumerate_trees",
    "eta",
    "graft",
    "isomorphic",
    "linear",
    "reduce_tree",
    "size",
    "subtrees",
    "weight",
]
