from dataclasses import dataclass, field

import numpy as np

from config.constants import CHANNEL_ROLES, ROLE_OTHER
from config.exceptions import DimensionError, ParameterError, ValidationError


@dataclass(frozen=True)
class GeoTransform:
    """
    North-up affine geotransform with positive pixel sizes.

    Pixel index space puts pixel centres at integer (row, col). The origin is the map position of
    the top-left corner of pixel (0, 0); rows grow southward, so map y decreases with row.

    Attributes:
      origin_x (float): Map x of the raster's left edge.
      origin_y (float): Map y of the raster's top edge.
      pixel_size_x (float): Map units per pixel along x (> 0).
      pixel_size_y (float): Map units per pixel along y (> 0); the southward sign is applied here.
    """
    origin_x: float = 0.0
    origin_y: float = 0.0
    pixel_size_x: float = 1.0
    pixel_size_y: float = 1.0

    def __post_init__(self):
        for name in ("origin_x", "origin_y", "pixel_size_x", "pixel_size_y"):
            if not np.isfinite(getattr(self, name)):
                raise ParameterError(f"GeoTransform.{name} must be finite")
        if self.pixel_size_x <= 0 or self.pixel_size_y <= 0:
            raise ParameterError(
                f"Pixel sizes must be positive, got ({self.pixel_size_x}, {self.pixel_size_y})")

    def pixel_to_map(self, row, col):
        """Maps pixel index coordinates (scalars or arrays) to map (x, y)."""
        x = self.origin_x + (np.asarray(col, dtype=np.float64) + 0.5) * self.pixel_size_x
        y = self.origin_y - (np.asarray(row, dtype=np.float64) + 0.5) * self.pixel_size_y
        return x, y

    def map_to_pixel(self, x, y):
        """Maps map (x, y) to continuous pixel index coordinates (row, col)."""
        col = (np.asarray(x, dtype=np.float64) - self.origin_x) / self.pixel_size_x - 0.5
        row = (self.origin_y - np.asarray(y, dtype=np.float64)) / self.pixel_size_y - 0.5
        return row, col

    def shifted(self, row0, col0):
        """Returns the transform of a window whose top-left pixel is (row0, col0)."""
        return GeoTransform(
            origin_x=self.origin_x + col0 * self.pixel_size_x,
            origin_y=self.origin_y - row0 * self.pixel_size_y,
            pixel_size_x=self.pixel_size_x,
            pixel_size_y=self.pixel_size_y,
        )

    @property
    def pixel_area(self):
        return self.pixel_size_x * self.pixel_size_y

    def to_list(self):
        return [self.origin_x, self.origin_y, self.pixel_size_x, self.pixel_size_y]

    @classmethod
    def from_list(cls, values):
        if len(values) != 4:
            raise ValidationError(f"Geotransform needs 4 values, got {len(values)}")
        return cls(*(float(v) for v in values))


def _frozen(array):
    array.setflags(write=False)
    return array


class MultiChannelRaster:
    """
    Dense row-major float32 raster of shape (height, width, channels), channel-last.

    Instances are immutable: the data array is copied on construction and marked read-only, so a
    raster can be shared across worker threads.

    Parameters:
      data (array-like): 2D (height, width) or 3D (height, width, channels) values.
      geo (GeoTransform): Georeferencing of pixel (0, 0).
      channel_roles (list of str, optional): One role tag per channel; defaults to "other".
      metadata (dict, optional): Provenance carried in the container header.
    """

    def __init__(self, data, geo=None, channel_roles=None, metadata=None):
        array = np.array(data, dtype=np.float32, copy=True)
        if array.ndim == 2:
            array = array[:, :, np.newaxis]
        if array.ndim != 3:
            raise DimensionError(f"Raster data must be 2D or 3D, got {array.ndim} dimensions")
        height, width, channels = array.shape
        if channels < 1:
            raise ValidationError("Raster must have at least one channel")
        if height < 1 or width < 1:
            raise ValidationError(f"Raster must be non-empty, got {height}x{width}")
        if not np.all(np.isfinite(array)):
            raise ValidationError("Raster values must be finite (NaN or infinity found)")
        roles = list(channel_roles) if channel_roles is not None else [ROLE_OTHER] * channels
        if len(roles) != channels:
            raise DimensionError(f"Got {len(roles)} channel roles for {channels} channels")
        for role in roles:
            if role not in CHANNEL_ROLES:
                raise ValidationError(f"Unknown channel role {role!r}")
        self.data = _frozen(np.ascontiguousarray(array))
        self.geo = geo if geo is not None else GeoTransform()
        self.channel_roles = tuple(roles)
        self.metadata = dict(metadata) if metadata else {}

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape[0], self.data.shape[1]

    def channel(self, index):
        """Returns one channel as a read-only 2D float32 view."""
        if not 0 <= index < self.channels:
            raise DimensionError(f"Channel {index} out of range for {self.channels}-channel raster")
        return self.data[:, :, index]

    def window(self, row0, col0, height, width):
        """Returns the sub-raster starting at (row0, col0) with an exact geotransform."""
        return MultiChannelRaster(
            self.data[row0:row0 + height, col0:col0 + width, :],
            geo=self.geo.shifted(row0, col0),
            channel_roles=self.channel_roles,
        )

    def __eq__(self, other):
        if not isinstance(other, MultiChannelRaster):
            return NotImplemented
        return (self.geo == other.geo and self.channel_roles == other.channel_roles
                and self.data.shape == other.data.shape
                and self.data.tobytes() == other.data.tobytes())

    def __repr__(self):
        return (f"MultiChannelRaster({self.height}x{self.width}x{self.channels}, "
                f"roles={list(self.channel_roles)})")


def compact_labels(labels):
    """
    Relabels a non-negative integer array to {0, 1..K} keeping the relative order of the ids.

    Compaction is idempotent: a compacted array maps onto itself.

    Parameters:
      labels (np.ndarray): Integer label array; 0 is background.

    Returns:
      np.ndarray: int32 array of the same shape.
    """
    labels = np.asarray(labels)
    if labels.size and labels.min() < 0:
        raise ValidationError("Labels must be non-negative")
    ids, inverse = np.unique(labels, return_inverse=True)
    if ids.size and ids[0] == 0:
        lookup = np.arange(ids.size, dtype=np.int32)
    else:
        lookup = np.arange(1, ids.size + 1, dtype=np.int32)
    return lookup[inverse].reshape(labels.shape)


class InstanceMap:
    """
    Integer-labelled raster: 0 is background, k >= 1 an instance id.

    Parameters:
      labels (array-like): 2D non-negative integer labels.
      geo (GeoTransform): Georeferencing shared with the source raster.
      compact (bool): Relabel to contiguous ids {1..K} on construction.
    """

    def __init__(self, labels, geo=None, compact=True):
        array = np.asarray(labels)
        if array.ndim != 2:
            raise DimensionError(f"Instance labels must be 2D, got {array.ndim} dimensions")
        if array.size and not np.issubdtype(array.dtype, np.integer):
            rounded = np.rint(array)
            if not np.array_equal(rounded, array):
                raise ValidationError("Instance labels must be integers")
            array = rounded
        if array.size and array.min() < 0:
            raise ValidationError("Instance labels must be non-negative")
        array = compact_labels(array) if compact else array.astype(np.int32)
        self.labels = _frozen(np.ascontiguousarray(array, dtype=np.int32))
        self.geo = geo if geo is not None else GeoTransform()

    @property
    def shape(self):
        return self.labels.shape

    @property
    def count(self):
        return int(self.labels.max()) if self.labels.size else 0

    def ids(self):
        ids = np.unique(self.labels)
        return [int(i) for i in ids if i != 0]

    def mask(self):
        return self.labels > 0

    def to_raster(self, metadata=None):
        return MultiChannelRaster(self.labels.astype(np.float32), geo=self.geo,
                                  channel_roles=[ROLE_OTHER], metadata=metadata)

    @classmethod
    def from_raster(cls, raster):
        if raster.channels != 1:
            raise DimensionError(f"Label rasters have one channel, got {raster.channels}")
        return cls(raster.channel(0), geo=raster.geo)

    @classmethod
    def empty(cls, shape, geo=None):
        return cls(np.zeros(shape, dtype=np.int32), geo=geo)


@dataclass
class Instance:
    """
    Vector representation of one detected or annotated tree.

    Attributes:
      id (int): Label in the owning InstanceMap.
      polygon: shapely Polygon in map units; contour outlines are one closed outer ring.
      centroid_px (tuple): (row, col) in pixel index space.
      centroid_map (tuple): (x, y) in map units.
      area_px (float): Area in pixels.
      area_map (float): Area in map units squared.
      compactness (float): 4*pi*area/perimeter^2 in (0, 1].
    """
    id: int
    polygon: object
    centroid_px: tuple
    centroid_map: tuple
    area_px: float
    area_map: float
    compactness: float


@dataclass
class InstanceSet:
    instances: list = field(default_factory=list)
    geo: GeoTransform = field(default_factory=GeoTransform)

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def centroids_px(self):
        """Returns {id: (row, col)} for every instance."""
        return {inst.id: inst.centroid_px for inst in self.instances}
