"""Exception types shared across the package."""


class ConfigurationError(Exception):
    """A model, context, or parameter combination is inconsistent or missing."""


class IngestionError(Exception):
    """A corpus or model file could not be parsed into valid domain objects."""


class SearchError(Exception):
    """A search produced no candidates where at least one is required."""


class EnumerationCapError(Exception):
    """Exact enumeration would exceed the configured safety cap.

    ``required`` carries the cap value that would be needed to proceed.
    """

    def __init__(self, message: str, required: int):
        super().__init__(message)
        self.required = required
