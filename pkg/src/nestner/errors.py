"""Exception hierarchy shared by every module of the package."""


class NestNerError(Exception):
    """Base class for all package errors."""


# annotations
class OverlapError(NestNerError, ValueError):
    pass


# autodiff kernel
class ShapeError(NestNerError, ValueError):
    pass


class NotScalarError(NestNerError, ValueError):
    pass


# encoder
class LengthMismatch(NestNerError, ValueError):
    pass


class SchemeMismatch(NestNerError, ValueError):
    pass


# crf
class EmptySequence(NestNerError, ValueError):
    pass


class IllegalGoldPath(NestNerError, ValueError):
    pass


# ordering
class TooLarge(NestNerError, ValueError):
    pass


# training
class MissingGradient(NestNerError, RuntimeError):
    pass


class EmptyCorpus(NestNerError, ValueError):
    pass


# inference
class SequenceTooLong(NestNerError, ValueError):
    pass


# corpus io
class ParseError(NestNerError, ValueError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class MissingTextFile(NestNerError, FileNotFoundError):
    pass


class SchemaError(NestNerError, ValueError):
    def __init__(self, index, message):
        super().__init__(f"record {index}: {message}")
        self.index = index


class TooSmall(NestNerError, ValueError):
    pass


class CheckpointError(NestNerError):
    pass


class VersionMismatch(CheckpointError):
    pass


class ShapeMismatch(CheckpointError):
    pass


class CorruptPayload(CheckpointError):
    pass


class ConfigError(NestNerError, ValueError):
    pass
