"""Exception hierarchy shared across the package."""


class OxydynError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(OxydynError):
    """Invalid configuration value or schema violation."""


class DomainError(OxydynError):
    """Model evaluation produced a non-finite result."""


class GridError(OxydynError):
    """Spatial grid or stencil precondition violated."""


class IntegrationError(OxydynError):
    """Time integration failed (blow-up, negativity beyond roundoff)."""


class BracketError(OxydynError):
    """Root bracketing precondition failed in a threshold search."""


class BranchError(OxydynError):
    """An equilibrium branch was lost while tracking it across a bracket."""


class SeedError(OxydynError):
    """A continuation seed could not be refined onto the target set."""


class ManifoldError(OxydynError):
    """Projection back onto the critical manifold failed."""


class InsufficientDataError(OxydynError):
    """A record is too short or too sparse for the requested diagnostic."""
