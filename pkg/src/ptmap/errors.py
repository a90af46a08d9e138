"""Exception hierarchy shared by all ptmap modules."""


class PTMapError(Exception):
    """Base class for every error raised by ptmap."""


class BrokenSymmetry(PTMapError):
    """Hamiltonian parameters lie at or beyond the exceptional point."""


class ExceptionalPoint(PTMapError):
    """An alpha-dependent quantity was requested too close to |sin(alpha)| = 1."""


class NoSolution(PTMapError):
    """A timing or inversion equation has no real solution."""


class DomainError(PTMapError):
    """An argument lies outside the domain where a formula is defined."""


class DegenerateInput(PTMapError):
    """Input states are (numerically) identical, so the mapping is ill-conditioned."""


class SignMismatch(PTMapError):
    """A requested sign branch contradicts the parameter domain."""


class RealityViolation(PTMapError):
    """N(t) - 1 acquired a negative eigenvalue, so zeta(t) is not Hermitian."""


class UnitarityDrift(PTMapError):
    """The integrated propagator drifted away from unitarity."""


class NotUnitary(PTMapError):
    """A matrix that must be unitary is not."""


class EmptyPostselection(PTMapError):
    """No shots landed in the postselected ancilla sector."""


class ValidationError(PTMapError):
    """Configuration supplied to the command-line driver is invalid."""
