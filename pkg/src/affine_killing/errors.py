"""Exception types raised across the package."""


class AffineKillingError(Exception):
    """Base class for all package errors."""


class DomainError(AffineKillingError, ValueError):
    """A function was evaluated outside its domain (log or fractional power of a
    non-positive number, division by zero, or a point with x1 = 0 for a spec
    carrying 1/x1 terms)."""


class UnboundParam(AffineKillingError, KeyError):
    """A parameter symbol had no value at evaluation time."""


class ParseError(AffineKillingError, ValueError):
    """Malformed expression, predicate or JSON document."""


class NotTorsionFree(AffineKillingError, ValueError):
    pass


class DictionaryInsufficient(AffineKillingError):
    """The function dictionary did not recover the full Killing algebra.

    ``found`` holds the verified fields and ``expected`` the dimension reported
    by jet prolongation.
    """

    def __init__(self, message, found=(), expected=None):
        super().__init__(message)
        self.found = list(found)
        self.expected = expected


class ProlongationError(AffineKillingError, RuntimeError):
    """Jet prolongation did not stabilise within the iteration cap."""


class ClosureError(AffineKillingError):
    """A bracket of basis fields left their span."""


class DegenerateBasis(AffineKillingError, ValueError):
    pass


class InvalidAlgebra(AffineKillingError, ValueError):
    """Structure constants violate antisymmetry or the Jacobi identity."""


class BadParams(AffineKillingError, ValueError):
    pass


class UnknownId(AffineKillingError, KeyError):
    pass
