"""Exception hierarchy shared by all horolab modules."""


class HorolabError(Exception):
    """Base class for every error raised by horolab."""


class DomainError(HorolabError, ValueError):
    """An argument lies outside the domain of the operation."""


class ResourceError(HorolabError):
    """A configured budget (enumeration cap, sample budget, ...) would be exceeded."""


class ConvergenceError(HorolabError, RuntimeError):
    """An iterative procedure hit its iteration cap."""


class UnsupportedError(HorolabError, NotImplementedError):
    """The request is well formed but outside what the implementation supports."""


class FitError(HorolabError):
    """Not enough usable data points to fit a rate."""


class SchemaError(HorolabError, ValueError):
    """An experiment configuration does not match the schema."""
