"""Exception types shared across the package."""


class ChartDomainError(ValueError):
    """A point lies on or outside the open domain box of a chart."""


class MetricDegeneracyError(ValueError):
    """A metric failed to be symmetric positive definite where required."""


class ConfigError(ValueError):
    """A scenario configuration is malformed or unresolvable (CLI exit 2)."""
