"""Exception types shared across the simulator."""


class UcranError(Exception):
    pass


class ValidationError(UcranError, ValueError):
    """Bad configuration or malformed input structure."""


class DomainError(UcranError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConsistencyError(UcranError, RuntimeError):
    """Internal kernel invariant broken (double release, negative PRBs...)."""


class RoutingError(UcranError):
    pass


class DropNoLink(UcranError):
    """A hop has zero rate; the task travelling over it is dropped."""


class DropNoProcessor(UcranError):
    pass
