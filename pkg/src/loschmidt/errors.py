class ContractError(ValueError):
    """A documented precondition or numerical contract was violated."""


class ConfigError(ValueError):
    """A run configuration failed validation."""
