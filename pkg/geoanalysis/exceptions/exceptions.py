# exceptions.py


class GeoAnalysisError(Exception):
    """Base class for every engine error."""


class SceneError(GeoAnalysisError):
    """Invalid scene: escapes the cylinder, bad resolution or bad parameters."""


class EmptySetError(GeoAnalysisError):
    """A query needs at least one sample."""


class GeometryDomainError(GeoAnalysisError):
    """An input lies outside the domain of a geometric map."""


class AmbiguousProjectionError(GeoAnalysisError):
    """The nearest-point fiber is not a singleton within tolerance."""

    def __init__(self, message, diameter=None):
        super().__init__(message)
        self.diameter = diameter


class HypothesisError(GeoAnalysisError):
    """
    A theorem hypothesis does not hold for the given scene.

    These are turned into verdicts by the verifiers, they never abort a run.
    """

    def __init__(self, hypothesis, message):
        super().__init__(f"{hypothesis}: {message}")
        self.hypothesis = hypothesis


class ConfigurationError(GeoAnalysisError):
    """Malformed run configuration, with the offending position when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column or 1}: {message}"
        super().__init__(message)
