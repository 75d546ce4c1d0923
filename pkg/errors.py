class LabError(Exception):
    """Base class for every error raised by the laboratory"""

    code = "lab-error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


class ResolutionTooCoarse(LabError):
    code = "resolution-too-coarse"


class EmptyDomain(LabError):
    code = "empty-domain"


class InvalidDomain(LabError):
    code = "invalid-domain"


class IncompatibleField(LabError):
    code = "incompatible-field"


class InvalidWeight(LabError):
    code = "invalid-weight"


class InvalidMeasure(LabError):
    code = "invalid-measure"


class InvalidPotential(LabError):
    code = "invalid-potential"


class SourcesTooClose(LabError):
    code = "sources-too-close"


class DegenerateTorsion(LabError):
    code = "degenerate-torsion"


class InvalidBump(LabError):
    code = "invalid-bump"


class InvalidSource(LabError):
    code = "invalid-source"


class InvalidArgument(LabError):
    code = "invalid-argument"


class ConfigurationError(LabError):
    code = "configuration-error"


class ParseError(LabError):
    code = "parse-error"

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)
