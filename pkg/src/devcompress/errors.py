"""Error types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called with arguments outside its contract."""


class InternalConsistencyError(RuntimeError):
    """An internal invariant (e.g. the evaluation-budget counter) was broken."""
