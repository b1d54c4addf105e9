"""Exception hierarchy.

``DomainError`` and its subclasses mean the inputs are outside the region where
the requested quantity is defined; the CLI maps them to exit status 2.
"""


class QGrafError(Exception):
    pass


class DomainError(QGrafError, ValueError):
    pass


class PoleInLowerParameter(DomainError):
    pass


class NonConvergent(DomainError):
    pass


class ZeroParameterPrefactor(DomainError, ZeroDivisionError):
    pass


class PoleAtNonpositiveInteger(DomainError):
    pass


class BranchAmbiguity(DomainError):
    pass


class CapExceeded(QGrafError, RuntimeError):
    pass


class DoublingCapExceeded(CapExceeded):
    pass
