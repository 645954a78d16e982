"""Exception hierarchy shared by every module."""


class RealMPCError(Exception):
    """Base class for all library errors."""


class ConfigurationError(RealMPCError):
    pass


class DomainError(RealMPCError):
    """An input lies outside the domain a protocol supports."""


class ReconstructionError(RealMPCError):
    pass


class CatalogError(RealMPCError):
    """Unknown protocol identifier."""


class PlanError(RealMPCError):
    pass


class ProtocolAbort(RealMPCError):
    """Online execution cannot continue.

    ``retryable`` marks aborts caused by an unlucky draw of fresh randomness
    (for example a singular mask), which a caller may rerun.
    """

    def __init__(self, message: str, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable


class ModelError(RealMPCError):
    pass
