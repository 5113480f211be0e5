"""Exception hierarchy shared by all modules.

Errors are grouped by how a command-line run should exit: input problems
(bad tables, bad config) are distinct from unmet mathematical preconditions
(Markov chains, size guards), which are distinct from internal invariant
breaches that indicate a bug rather than bad input.
"""


class SecrecyToolError(Exception):
    """Base class for every error raised by this package."""


class InputError(SecrecyToolError):
    """Caller supplied an invalid object (distribution, channel, config)."""


class PreconditionError(SecrecyToolError):
    """Inputs are well-formed but violate a required mathematical premise."""


class InvariantViolation(SecrecyToolError):
    """An internal consistency check failed; indicates a bug, not bad input."""


# ---- input-validation errors -------------------------------------------

class DimensionMismatch(InputError):
    """Array shape does not match the declared alphabet sizes."""


class NotNormalizable(InputError):
    """Probability mass deviates from total 1 beyond the repair tolerance."""


class NegativeMass(InputError):
    """Probability mass contains negative entries beyond -1e-15."""


class UnknownVariable(InputError):
    """A referenced variable name is not an axis of the distribution."""


class NameCollision(InputError):
    """A new variable name duplicates an existing axis name."""


class AlphabetMismatch(InputError):
    """Two objects that must share an alphabet do not."""


class LengthMismatch(InputError):
    """A sequence length does not equal the configured block length."""


class IndexOutOfRange(InputError):
    """A message index lies outside its declared range."""


class ParseError(InputError):
    """Config text could not be parsed; message carries the position."""


class ValidationError(InputError):
    """Config parsed but violates the schema; message names the field."""


class RoleError(InputError):
    """Variable role assignment is inconsistent with the requested task."""


# ---- precondition errors -----------------------------------------------

class AlphabetTooLarge(PreconditionError):
    """An enumeration guard on alphabet size was exceeded."""


class TooLarge(PreconditionError):
    """A block-length or codebook-size guard was exceeded."""


class NotInPin(PreconditionError):
    """The supplied auxiliary pair is not an admissible inner-bound pair."""


class NotMarkov(PreconditionError):
    """A required Markov chain does not hold within tolerance."""


class MarkovPreconditionFailed(NotMarkov):
    """A region formula's Markov premise failed; message names the chain."""
