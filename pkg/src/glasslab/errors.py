"""Exception types shared across glasslab."""


class GlasslabError(Exception):
    """Base class for all glasslab errors."""


class DomainError(GlasslabError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class SpecError(GlasslabError, ValueError):
    """A model specification or configuration is malformed."""


class UnsupportedTemplateError(GlasslabError, ValueError):
    """No closed-form counting template exists for a cluster structure."""


class BudgetError(GlasslabError, RuntimeError):
    """A computation would exceed its configured work budget."""

    def __init__(self, message, required=None, limit=None):
        super().__init__(message)
        self.required = required
        self.limit = limit
