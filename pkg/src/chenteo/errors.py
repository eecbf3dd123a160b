"""Exception hierarchy shared by all modules."""


class ChenTeoError(Exception):
    pass


class DomainError(ChenTeoError, ValueError):
    """A point lies outside (or within the guard band of) a chart domain."""


class SingularMetric(ChenTeoError, ArithmeticError):
    pass


class ParamError(ChenTeoError, ValueError):
    pass


class GaugeChartError(ChenTeoError, ValueError):
    pass


class UnsupportedForm(ChenTeoError, KeyError):
    pass


class QuadratureFailure(ChenTeoError, RuntimeError):
    pass


class ConsistencyError(ChenTeoError, RuntimeError):
    pass


class DivergentSum(ChenTeoError, ValueError):
    pass


class ToleranceUnreachable(ChenTeoError, RuntimeError):
    pass


class ConfigError(ChenTeoError, ValueError):
    pass
