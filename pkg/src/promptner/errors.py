"""Exception hierarchy shared across the library."""


class PromptnerError(ValueError):
    """Base class for all library errors."""


class DimensionError(PromptnerError):
    """Tensor shapes are incompatible for the requested operation."""


class ContractError(PromptnerError):
    """A caller violated a documented precondition."""


class ConfigError(PromptnerError):
    """A configuration value is out of its valid range."""


class SizingError(PromptnerError):
    """An input exceeds a configured size limit (e.g. max sequence length)."""


class DataError(PromptnerError):
    """A data file is malformed or inconsistent."""
