"""Exception hierarchy shared by every stage of the toolchain."""


class GpuThermError(Exception):
    """Base class; ``stage`` names the pipeline step that failed, if known."""

    stage = None


class InvalidSpec(GpuThermError):
    pass


class OverlapError(GpuThermError):
    pass


class ParseError(GpuThermError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MismatchedExtent(GpuThermError):
    pass


class IncompleteTriple(ParseError):
    def __init__(self, component, line=None):
        self.component = component
        super().__init__(f"incomplete min/avg/max triple for component {component!r}", line)


class OrderViolation(ParseError):
    def __init__(self, component, values, line=None):
        self.component = component
        super().__init__(
            f"component {component!r} violates 0 <= min <= avg <= max: {values}", line
        )


class RowLengthMismatch(ParseError):
    pass


class UnknownUnit(GpuThermError):
    pass


class UnknownComponent(GpuThermError):
    pass


class MappingNotFound(GpuThermError):
    pass


class InvalidGrid(GpuThermError):
    pass


class SolveFailure(GpuThermError):
    pass


class DimensionMismatch(GpuThermError):
    pass


class BadLayerIndex(GpuThermError):
    pass


class ConfigError(GpuThermError):
    pass
