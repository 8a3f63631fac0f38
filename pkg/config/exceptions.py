class DeadwoodError(Exception):
    """Base class for every error raised by the deadwood packages."""


class ValidationError(DeadwoodError, ValueError):
    """An input violates a documented invariant."""


class ParameterError(ValidationError):
    """A configuration value is outside its stated range."""


class DimensionError(ValidationError):
    """Shapes or channel counts do not agree."""


class FormatError(ValidationError):
    """A raster container header cannot be parsed."""


class TruncationError(FormatError):
    """A raster payload is shorter or longer than its header declares."""


class UnsupportedGeometryError(ValidationError):
    """A GeoJSON feature carries a geometry other than Polygon."""


class PlacementError(DeadwoodError):
    """Synthetic crown placement ran out of retries."""


class RasterIOError(DeadwoodError, OSError):
    """A file could not be read or written."""
