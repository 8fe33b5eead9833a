class ImpairDetectError(Exception):
    pass


class ValidationError(ImpairDetectError):
    """
    Raised when an input fails a type, invariant or precondition check.
    The CLI maps it to exit code 1.
    """
    pass


class IngestionError(ValidationError):
    def __init__(self, message, path=None, row=None):
        self.path = path
        self.row = row
        location = ""
        if path is not None:
            location = f" [file: {path}"
            location += f", row {row}]" if row is not None else "]"
        super().__init__(f"{message}{location}")


class UpstreamMismatchError(ValidationError):
    pass


class ConvergenceWarning(UserWarning):
    pass
