"""Exception hierarchy shared by all hamstab modules."""

from __future__ import annotations


class HamstabError(Exception):
    """Base class for every error raised by the library."""


class IdenticallyZero(HamstabError):
    """A trigonometric polynomial that must be nonzero is identically zero."""


class IllConditioned(HamstabError):
    """A root cluster could not be resolved within the configured tolerances."""


class NegativeAction(HamstabError):
    """An action value r < 0 was passed where r >= 0 is required."""


class OnlyLinear(HamstabError):
    """The Hamiltonian has no term beyond the pure rotation omega * r."""


class NotInNormalForm(HamstabError):
    """The normal-form residual exceeds the autonomization tolerance."""


class NonResonantHarmonic(HamstabError):
    """An angle harmonic is not a multiple of the resonance order."""


class PreconditionError(HamstabError):
    """An operation was called with inputs violating its precondition."""


class NoComponent(HamstabError):
    """The sampled region D_a^- has no connected component touching r = 0."""


class CertificateFailed(HamstabError):
    """A sampled point violates a Chetaev certificate condition."""

    def __init__(self, message: str, witness: dict | None = None):
        super().__init__(message)
        self.witness = witness or {}


class NotMonotone(HamstabError):
    """dH0/dr <= 0 somewhere on the requested energy level."""


class NewtonDiverged(HamstabError):
    """Newton iteration for the level curve failed to converge."""


class StepUnderflow(HamstabError):
    """The adaptive integrator step size fell below the allowed minimum."""

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ParseError(HamstabError):
    """Malformed input text; carries the 1-based line and column."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class PipelineError(HamstabError):
    """A module error raised inside a CLI pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
