"""Exception taxonomy shared by all modules.

Config problems, numeric failures and resource-budget violations are kept
as separate branches so the CLI can map them onto distinct exit codes.
"""


class DhtError(Exception):
    """Base class for all library errors."""


class ConfigError(DhtError):
    """Malformed configuration document or channel/encoder specification."""


class AxisMismatch(DhtError):
    """Operands disagree on alphabets or axis names."""


class OverlappingAxisSets(DhtError):
    """Axis subsets passed to an information quantity are not disjoint."""


class SupportViolation(DhtError):
    """p puts mass where q has none; the divergence would be infinite."""


class SymbolOutOfRange(DhtError):
    """A sequence contains a symbol outside its alphabet."""


class EmptySequence(DhtError):
    """An empirical type was requested for a zero-length sequence."""


class InvalidDistribution(DhtError):
    """Probability vector has negative mass or does not sum to one."""


class InfeasibleBall(DhtError):
    """Type ball is empty (cannot happen for non-negative widths)."""


class BudgetExceeded(DhtError):
    """A tensor or enumeration would exceed the configured cell budget."""


class InvalidBlocklength(DhtError):
    """Block length must be a positive integer."""


class BlocklengthViolation(DhtError):
    """Channel block exceeds the bandwidth ratio allowance n <= tau*k."""


class ZeroZMass(DhtError):
    """Side-information symbol with zero probability; conditionals undefined."""


class HelpersExceeded(DhtError):
    """More observers than the operation supports."""


class InsufficientData(DhtError):
    """Not enough usable points for a fit."""


class DegenerateTrialCount(DhtError):
    """Trial count below the minimum required for estimation."""


class QNotPositiveWarning(UserWarning):
    """The derived alternative distribution has zero cells."""
