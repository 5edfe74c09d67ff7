"""Exception hierarchy shared across the package.

Everything raised on purpose derives from :class:`WmtError`, split into
three broad families so the CLI can map failures to exit codes:
validation problems (bad inputs, bad shapes, bad parameters), I/O
problems, and numerical failures of the transport solver.
"""


class WmtError(Exception):
    """Base class for all package errors."""


class ValidationError(WmtError):
    """Input violates a documented precondition or invariant."""


class IOFailure(WmtError):
    """File could not be read or written."""


class SolverFailure(WmtError):
    """The transport solver did not converge (pivot limit exceeded)."""


# -- measures ---------------------------------------------------------------

class LengthNotDyadic(ValidationError):
    """Sequence length n does not satisfy n == 1 (mod 2**level)."""


class MixedKinds(ValidationError):
    """Sequence mixes Gaussian and discrete elements."""


class DimensionMismatch(ValidationError):
    """Atoms (or measures) do not share a common ambient dimension."""


class BadWeights(ValidationError):
    """Weights are negative or too far from summing to one."""


class ParseError(ValidationError):
    """Sequence or pyramid file is malformed."""


# -- transport --------------------------------------------------------------

class TooLarge(ValidationError):
    """Brute-force oracle called with more than 6 atoms per side."""


class DegenerateMap(ValidationError):
    """Affine update with slope <= -1 would collapse the variance."""


class BadParameter(ValidationError):
    """Scalar parameter outside its legal range."""


class UnsupportedExponent(ValidationError):
    """Gaussian closed forms exist only for the quadratic cost p = 2."""


class KindMismatch(ValidationError):
    """Operation applied to measures of different kinds."""


class IncompatibleDetail(ValidationError):
    """Detail does not match the base measure (kind or marginals)."""


# -- sequences / multiscale -------------------------------------------------

class TooShort(ValidationError):
    """Sequence operation needs at least two elements."""


class Misaligned(ValidationError):
    """Detail layer length does not match the refined sequence."""


class BadLength(ValidationError):
    """Downsampling needs an odd length and level >= 1."""


# -- experiments ------------------------------------------------------------

class BadSpec(ValidationError):
    """Experiment specification violates its invariants."""


class SingularPoint(ValidationError):
    """Dipole field evaluated at one of the point charges."""


class ParticleHitCharge(WmtError):
    """A simulated particle came within 1e-3 of a charge."""
