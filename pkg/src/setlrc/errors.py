"""Exception and warning types raised by setlrc."""


class SetLRCError(Exception):
    """Base class for all setlrc errors."""


class InvalidInputError(SetLRCError, ValueError):
    """Malformed input: wrong shape, channel count, value range or dimensions."""


class InvalidConfigError(SetLRCError, ValueError):
    """A configuration value is out of its allowed domain."""


class ConditionViolationError(SetLRCError, ValueError):
    """The regressor would have more columns than rows (T >= N must hold)."""


class SingularRegressorError(SetLRCError, ArithmeticError):
    """The normal equations cannot be solved for a rank-deficient regressor."""


class UnsupportedStreamingError(SetLRCError):
    """The voting strategy has no online accumulator."""


class IngestError(SetLRCError):
    """A dataset directory does not follow the root/class/set/image layout."""


class ProtocolError(SetLRCError):
    """A gallery/test split cannot be drawn from the available sets."""


class GalleryFormatError(SetLRCError):
    """A serialized gallery container is corrupt or has an unknown version."""


class DegenerateInputWarning(UserWarning):
    """Emitted when a constant vector cannot be standardized."""
