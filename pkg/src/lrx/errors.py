class ResourceLimitError(RuntimeError):
    """A computation would exceed its memory or size budget."""


class UndefinedCorrelationError(ValueError):
    """Correlation requested for a constant input."""
