"""Exception hierarchy shared by every conelab module."""


class ConelabError(ValueError):
    """Base class for computation errors (CLI exit status 1)."""


class DimensionError(ConelabError):
    pass


class EmptySetError(ConelabError):
    pass


class ScheduleError(ConelabError):
    pass


class NotOnSetError(ConelabError):
    """A base point is farther than the membership tolerance from its set."""


class WindowError(ConelabError):
    """A graph window does not cover every probe point of a schedule."""


class CertificationError(ConelabError):
    """A distance could not be certified within the evaluation budget."""
