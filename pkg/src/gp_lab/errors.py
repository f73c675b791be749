"""Exception hierarchy; the CLI maps these to exit code 1."""


class GpLabError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(GpLabError):
    """An operation was called with arguments outside its contract."""


class DomainError(GpLabError):
    """A formula parameter is outside its mathematical domain."""


class ConfigError(GpLabError):
    """A config file or CLI argument failed validation."""


class InsufficientSamples(GpLabError):
    """A conditional estimate found no qualifying states within budget."""
