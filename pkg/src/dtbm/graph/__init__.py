"""Graph core: storage, taxonomy, consistency, inheritance and access control."""

from .errors import (
    AccessDenied,
    AmbiguousInheritance,
    CycleDetected,
    DuplicateId,
    EmptyTypes,
    GraphError,
    HasDependents,
    InvalidValue,
    UnknownConcept,
    UnknownElement,
    UnknownParent,
    UnknownPredicate,
    UnknownPropertyType,
)
from .store import (
    ROOT_PRINCIPAL,
    Concept,
    DeletionReport,
    Edge,
    Graph,
    Instance,
    Permission,
    PredicateType,
    PropertyType,
)

__all__ = [
    "AccessDenied", "AmbiguousInheritance", "Concept", "CycleDetected", "DeletionReport",
    "DuplicateId", "Edge", "EmptyTypes", "Graph", "GraphError", "HasDependents", "Instance",
    "InvalidValue", "Permission", "PredicateType", "PropertyType", "ROOT_PRINCIPAL",
    "UnknownConcept", "UnknownElement", "UnknownParent", "UnknownPredicate",
    "UnknownPropertyType",
]
