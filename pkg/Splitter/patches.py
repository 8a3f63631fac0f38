from dataclasses import dataclass

import numpy as np

from RasterCore.raster import MultiChannelRaster
from config.constants import DEFAULT_OVERLAP_FRACTION, DEFAULT_PATCH_SIZE
from config.exceptions import DimensionError, ParameterError


@dataclass
class Patch:
    """
    One fixed-size window of an image.

    Attributes:
      index (int): Position in extraction order (row-major over origins).
      row0, col0 (int): Top-left pixel in the source image.
      raster (MultiChannelRaster): The window with its exact geotransform.
    """
    index: int
    row0: int
    col0: int
    raster: MultiChannelRaster

    @property
    def geo(self):
        return self.raster.geo

    @property
    def size(self):
        return self.raster.height

    def centroid_map(self):
        """Map (x, y) of the patch centre."""
        centre = (self.raster.height - 1) / 2.0, (self.raster.width - 1) / 2.0
        x, y = self.geo.pixel_to_map(*centre)
        return float(x), float(y)


def patch_stride(size, overlap_fraction):
    return max(1, int(round(size * (1.0 - overlap_fraction))))


def patch_origins(length, size, stride):
    """
    Origins along one axis: multiples of stride, plus a final origin flush with the far border when
    the last stride leaves pixels uncovered.
    """
    if length <= size:
        return [0]
    origins = list(range(0, length - size + 1, stride))
    if origins[-1] + size < length:
        origins.append(length - size)
    return origins


def extract_patches(image, size=DEFAULT_PATCH_SIZE, overlap_fraction=DEFAULT_OVERLAP_FRACTION, pad=False):
    """
    Cuts an image into square overlapping patches.

    Parameters:
      image (MultiChannelRaster): Source image.
      size (int): Patch edge in pixels.
      overlap_fraction (float): Overlap in [0, 1); stride = round(size * (1 - overlap_fraction)).
      pad (bool): Zero-pad images smaller than size on the bottom and right.

    Returns:
      list of Patch: Row-major over origins; every image pixel lies in at least one patch.

    Raises:
      DimensionError: If the image is smaller than a patch and padding is disabled.
    """
    if int(size) != size or size < 1:
        raise ParameterError(f"Patch size must be a positive integer, got {size}")
    if not 0 <= overlap_fraction < 1:
        raise ParameterError(f"overlap_fraction must lie in [0, 1), got {overlap_fraction}")
    height, width = image.shape
    if (height < size or width < size) and not pad:
        raise DimensionError(f"Image {height}x{width} is smaller than patch size {size}; enable padding")
    stride = patch_stride(size, overlap_fraction)
    patches = []
    for row0 in patch_origins(height, size, stride):
        for col0 in patch_origins(width, size, stride):
            if row0 + size <= height and col0 + size <= width:
                raster = image.window(row0, col0, size, size)
            else:
                data = np.zeros((size, size, image.channels), dtype=np.float32)
                window = image.data[row0:row0 + size, col0:col0 + size, :]
                data[:window.shape[0], :window.shape[1], :] = window
                raster = MultiChannelRaster(data, geo=image.geo.shifted(row0, col0),
                                            channel_roles=image.channel_roles)
            patches.append(Patch(index=len(patches), row0=row0, col0=col0, raster=raster))
    return patches


def count_segments_per_patch(patches, centroids):
    """
    Counts annotation centroids inside each patch footprint.

    A centroid in the overlap of two patches counts for both.

    Parameters:
      patches (list of Patch): Patches with their geotransforms.
      centroids (list): (x, y) map coordinates.

    Returns:
      list of int: One count per patch.
    """
    if not len(centroids):
        return [0] * len(patches)
    xs, ys = np.asarray(centroids, dtype=np.float64).T
    counts = []
    for patch in patches:
        rows, cols = patch.geo.map_to_pixel(xs, ys)
        inside = ((rows >= -0.5) & (rows < patch.raster.height - 0.5)
                  & (cols >= -0.5) & (cols < patch.raster.width - 0.5))
        counts.append(int(np.count_nonzero(inside)))
    return counts
