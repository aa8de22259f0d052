"""Exception hierarchy shared across the package."""


class SaliencyError(Exception):
    """Base class for every error raised by ctxsal."""


class NonFiniteValue(SaliencyError, ValueError):
    pass


class DimensionMismatch(SaliencyError, ValueError):
    pass


class EmptyLabelMap(SaliencyError, ValueError):
    """Raised when a label map holds only VOID pixels."""


class DivergedLoss(SaliencyError, RuntimeError):
    pass


class MalformedModelFile(SaliencyError, ValueError):
    pass


class MalformedConfigFile(SaliencyError, ValueError):
    """Raised for LUT bank, context mapping and pipeline config files."""


class MissingUserLut(SaliencyError, LookupError):
    def __str__(self):
        # LookupError would repr() the message otherwise
        return str(self.args[0]) if self.args else "user LUT requested but not present"


class UnsupportedLabelIndex(SaliencyError, ValueError):
    pass


class NotPaletteIndexed(SaliencyError, ValueError):
    pass


class MissingSplitFile(SaliencyError, FileNotFoundError):
    pass


class MissingImage(SaliencyError, FileNotFoundError):
    pass


class MissingLabel(SaliencyError, FileNotFoundError):
    pass
