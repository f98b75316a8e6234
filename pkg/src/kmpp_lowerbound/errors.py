"""Exception hierarchy. Each class maps to one CLI exit code."""


class KmppError(Exception):
    exit_code = 1


class ParameterError(KmppError, ValueError):
    exit_code = 2


class DomainError(ParameterError):
    """Argument outside the domain where a quantity is defined."""


class SamplingError(ParameterError):
    pass


class ConditioningError(ParameterError):
    """Lemma checks were asked for a center set without a center at the origin."""


class ScheduleError(KmppError):
    exit_code = 3


class BudgetExceeded(KmppError):
    exit_code = 4
