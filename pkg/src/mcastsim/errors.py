"""Exception hierarchy shared by every module."""


class SimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(SimError):
    """Invalid scenario, topology, ladder or parameter value."""


class ParseError(SimError):
    """Scenario text could not be parsed, or carries an unknown field."""


class RoutingError(SimError):
    """A multicast member cannot be reached from the server."""


class StateError(SimError):
    """An operation received an object that violates its preconditions."""


class MembershipError(SimError):
    """Duplicate join or leave of a non-member."""


class InfeasibleError(SimError):
    """No feasible allocation exists, not even the all-lowest plan."""


class OracleError(SimError):
    """Exhaustive search space exceeds the enumeration guard."""


class IoError(SimError):
    """Result artifacts could not be written."""
