"""Exception hierarchy.

Everything raised deliberately by this package derives from TravflowError,
so callers can catch one type at the CLI boundary and map it to an exit
code.  Subclasses mark the pipeline stage that failed.
"""


class TravflowError(Exception):
    """Base class for all errors raised by travflow."""


class ParseError(TravflowError):
    """Bad expression text.  Carries the character offset of the problem."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class EvalDomainError(TravflowError):
    """Expression evaluated outside its domain (division by zero etc.)."""


class SceneInvalid(TravflowError):
    """Scene failed validation: empty domain, non-Lyapunov f, boundary
    not regular, flow leaking through the box walls, or vanishing field."""


class DegenerateContact(TravflowError):
    """All boundary derivatives of z along the flow vanish below tolerance
    up to the maximum order, so no contact multiplicity can be assigned."""


class EscapedBbox(TravflowError):
    """A trajectory left the bounding box while still inside the domain."""


class NonTraversing(TravflowError):
    """A trajectory exceeded the step or arc-length budget without
    reaching the boundary in both directions."""


class InconsistentQuotient(TravflowError):
    """Probes along one boundary arc disagree about the trajectory class
    structure even after refinement, so no quotient cell can be formed."""


class UnmatchedClass(TravflowError):
    """A trajectory class could not be matched to any cell of the
    quotient complex."""


class OrderViolation(TravflowError):
    """Boundary order data violates the axioms of a traversing relation
    (reflexive pair, 2-cycle, or f-incompatibility)."""


class CurveExtractionFailed(TravflowError):
    """The boundary level set could not be extracted as closed curves
    inside the bounding box."""


class UnsupportedMode(TravflowError):
    """Operation not available for this complex mode (e.g. Betti numbers
    of a sampled 3d complex)."""
