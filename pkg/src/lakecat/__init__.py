"""Embeddable metadata catalog for data lakes.

Per-object metadata lives in a hypernode: a rooted tree of version and
representation nodes connected by update and transformation edges.
Objects are linked by weighted similarity edges, grouped into
collections by attribute value or tag, and joined by parenthood
hyperedges. A global layer adds an inverted keyword index, an
append-only usage log, and thesaurus resources.
"""

from .errors import CatalogError
from .model import (
    Grouping,
    Hypernode,
    MetaEdge,
    MetaNode,
    ParenthoodLink,
    SimilarityLink,
    Summary,
    Tag,
    Violation,
    validate_catalog_graph,
    validate_hypernode,
)
from .store import Catalog, import_catalog, open_catalog

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "CatalogError",
    "Grouping",
    "Hypernode",
    "MetaEdge",
    "MetaNode",
    "ParenthoodLink",
    "SimilarityLink",
    "Summary",
    "Tag",
    "Violation",
    "import_catalog",
    "open_catalog",
    "validate_catalog_graph",
    "validate_hypernode",
    "__version__",
]
