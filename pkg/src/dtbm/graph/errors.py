"""Exceptions raised by the graph store."""


class GraphError(Exception):
    """Base class for graph errors. ``element_id`` names the offending element."""

    def __init__(self, element_id=None, message=None):
        self.element_id = element_id
        if message is None:
            message = f"{type(self).__name__}: {element_id!r}"
        super().__init__(message)


class DuplicateId(GraphError):
    pass


class UnknownElement(GraphError):
    pass


class UnknownParent(UnknownElement):
    pass


class UnknownConcept(UnknownElement):
    pass


class UnknownPredicate(UnknownElement):
    pass


class UnknownPropertyType(UnknownElement):
    pass


class CycleDetected(GraphError):
    pass


class EmptyTypes(GraphError):
    pass


class InvalidValue(GraphError):
    pass


class AmbiguousInheritance(GraphError):
    def __init__(self, element_id, key, candidates):
        self.key = key
        self.candidates = candidates
        super().__init__(
            element_id,
            f"ambiguous inherited value for {key!r} on {element_id!r}: {candidates!r}",
        )


class HasDependents(GraphError):
    def __init__(self, element_id, dependents):
        self.dependents = sorted(dependents)
        shown = ", ".join(self.dependents[:10])
        more = "" if len(self.dependents) <= 10 else f" (+{len(self.dependents) - 10} more)"
        super().__init__(element_id, f"{element_id!r} has dependents: {shown}{more}")


class AccessDenied(GraphError):
    def __init__(self, element_id, principal, permission):
        self.principal = principal
        self.permission = permission
        super().__init__(
            element_id, f"{principal!r} lacks {permission.name} on {element_id!r}"
        )
