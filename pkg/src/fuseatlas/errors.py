"""Exception types shared across the catalog engine."""

from __future__ import annotations


class FuseAtlasError(Exception):
    """Base class for all engine errors."""


class InvalidInput(FuseAtlasError, ValueError):
    """An operation received input that violates its precondition."""


class InvalidDimensionToken(FuseAtlasError, ValueError):
    """A dimension string contained a token outside the 2D/3D/video vocabulary."""

    def __init__(self, token: str):
        super().__init__(f"unmappable dimension token: {token!r}")
        self.token = token


class UnknownTask(FuseAtlasError, ValueError):
    """A task string could not be mapped onto the 12-category task vocabulary."""

    def __init__(self, token: str):
        super().__init__(f"unknown task: {token!r}")
        self.token = token


class VocabularyError(FuseAtlasError, ValueError):
    """The vocabulary mapping file is malformed."""


class RecipeParseError(FuseAtlasError, ValueError):
    """Recipe text is not valid JSON. Carries the byte position of the failure."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class RecipeFieldError(FuseAtlasError, ValueError):
    """A recipe field holds a value outside its domain."""

    def __init__(self, field: str, value: object, reason: str = ""):
        detail = f": {reason}" if reason else ""
        super().__init__(f"invalid recipe field {field!r} = {value!r}{detail}")
        self.field = field
        self.value = value


class FacetError(FuseAtlasError, ValueError):
    """A facet state referenced an unknown filter axis."""


class AxisError(FuseAtlasError, ValueError):
    """A statistics request referenced an unknown aggregation axis."""


class WeightError(FuseAtlasError, ValueError):
    """Sampling-weight computation received an unusable temperature or group."""
