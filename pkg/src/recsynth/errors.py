"""Exception hierarchy shared by every stage of the generator."""


class RecsynthError(Exception):
    """Base class for all generator errors."""


class DomainError(RecsynthError, ValueError):
    """An argument lies outside the domain of a numerical routine."""


class FactorizationError(RecsynthError, ValueError):
    """A matrix could not be Cholesky-factorized."""


class ConfigError(RecsynthError, ValueError):
    """A generation config violates one of its invariants."""


class DataError(RecsynthError, ValueError):
    """Input data (a user table, a bundle on disk) is malformed."""


class NoRuleFiredError(RecsynthError, RuntimeError):
    """Fuzzy inference produced an empty aggregate (incomplete rule base)."""
