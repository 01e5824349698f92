"""Exception hierarchy. Everything raised on bad data derives from DataError."""


class G4AttnError(Exception):
    pass


class DataError(G4AttnError, ValueError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EncodingError(DataError):
    pass


class ContractError(G4AttnError, ValueError):
    """A documented precondition of an operation was violated."""


class SamplingExhausted(DataError):
    pass


class UndefinedMetric(DataError):
    pass


class ShapeError(G4AttnError, ValueError):
    pass
