"""Typed errors raised by the engine.

Every failure mode that a caller can reasonably branch on gets its own
class; everything derives from EngineError so the CLI can catch one type.
"""


class EngineError(Exception):
    """Base class for all engine errors."""


class MissingAssignment(EngineError):
    """A polynomial was evaluated without assigning all of its variables."""


class DegreeOverflow(EngineError):
    """A polynomial operation exceeded the total-degree cap."""


class BadPartition(EngineError):
    """Pieces of a piecewise function leave a gap or overlap."""


class IrrationalBreakpoint(EngineError):
    """A chamber boundary is an irrational root; the input leaves the
    engine's scope (all supported boundaries are rational)."""


class LatticeMismatch(EngineError):
    """Classes from different lattices (or the wrong number of factors)
    were combined in an intersection product."""


class DecompositionError(EngineError):
    """The chamber decomposition could not be carried out."""


class SingularGram(DecompositionError):
    """The active support has a singular pairing matrix; the declared
    candidate set is unusable."""


class NotPseudoeffective(DecompositionError):
    """Negative volume detected inside the declared parameter range."""


class UnknownCurve(EngineError):
    """A curve name was requested that the decomposition does not know."""


class MissingIncidence(EngineError):
    """An active candidate has no declared local multiplicity at a point."""


class ParseError(EngineError):
    """A scenario file is syntactically malformed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(EngineError):
    """A scenario file parsed but violates a structural invariant."""


class UnknownScenario(EngineError):
    """No built-in scenario with the requested name."""
