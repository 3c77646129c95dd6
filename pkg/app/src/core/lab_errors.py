class LabError(Exception):
    exit_code = 2


class ValidationError(LabError):
    exit_code = 1


class NumericalError(LabError):
    exit_code = 2


class StorageError(LabError):
    exit_code = 3


class DuplicateNameError(ValidationError): ...


class ShapeMismatchError(ValidationError): ...


class BadMagicError(StorageError): ...


class UnsupportedVersionError(StorageError): ...


class TruncatedPayloadError(StorageError): ...


class DivergenceError(NumericalError): ...


class InvariantViolation(NumericalError): ...
