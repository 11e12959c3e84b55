"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates an operation's precondition."""


class CSVParseError(ValueError):
    """A CSV file could not be turned into a numeric dataset.

    ``row`` is the 1-based line number in the file (the header is line 1) and
    ``column`` the header name, when the failure can be pinned to a cell.
    """

    def __init__(self, message, path=None, row=None, column=None):
        self.path = path
        self.row = row
        self.column = column
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"line {row}")
        if column is not None:
            where.append(f"column {column!r}")
        self.message = message
        super().__init__(f"{': '.join([', '.join(where), message]) if where else message}")

    def __reduce__(self):
        return (type(self), (self.message, self.path, self.row, self.column))


class MissingFileError(CSVParseError, FileNotFoundError):
    pass


class NonNumericCellError(CSVParseError):
    pass


class MissingTargetError(CSVParseError):
    pass


class ExperimentError(RuntimeError):
    """A failure inside one repetition of an experiment."""

    def __init__(self, repetition, cause):
        self.repetition = repetition
        self.cause = cause
        super().__init__(f"repetition {repetition}: {type(cause).__name__}: {cause}")

    def __reduce__(self):
        # keeps the exception picklable across worker processes
        return (type(self), (self.repetition, self.cause))
