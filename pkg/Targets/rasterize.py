import numpy as np
import shapely

from RasterCore.raster import InstanceMap
from config.exceptions import ParameterError
from config.logger import get_logger

logger = get_logger(__name__)


def _as_polygon(item):
    return getattr(item, "polygon", item)


def rasterize_polygons(annotations, geo, shape):
    """
    Burns polygons into an InstanceMap by testing every pixel centre against each polygon.

    Polygons are burned in list order, so a later polygon wins pixels it shares with an earlier
    one. Polygons whose bounds miss the raster extent, or that cover no pixel centre, are dropped and
    counted. A polygon whose pixels are all taken by later polygons is dropped with a warning but
    not counted.

    Parameters:
      annotations (list): shapely polygons in map units (or Annotation objects).
      geo (GeoTransform): Georeferencing of the target raster.
      shape (tuple): (height, width) in pixels.

    Returns:
      tuple: (InstanceMap, dropped_count). Labels follow the order of the kept polygons.
    """
    height, width = shape
    if height < 1 or width < 1:
        raise ParameterError(f"Raster shape must be positive, got {shape}")
    labels = np.zeros((height, width), dtype=np.int32)
    dropped = 0
    next_label = 1
    sources = []
    for position, item in enumerate(annotations):
        polygon = _as_polygon(item)
        min_x, min_y, max_x, max_y = polygon.bounds
        # Bounds -> pixel index window (rows grow southward).
        row_top, col_left = geo.map_to_pixel(min_x, max_y)
        row_bottom, col_right = geo.map_to_pixel(max_x, min_y)
        r0 = max(int(np.floor(row_top)), 0)
        r1 = min(int(np.ceil(row_bottom)), height - 1)
        c0 = max(int(np.floor(col_left)), 0)
        c1 = min(int(np.ceil(col_right)), width - 1)
        if r0 > r1 or c0 > c1:
            dropped += 1
            continue
        rows, cols = np.mgrid[r0:r1 + 1, c0:c1 + 1]
        xs, ys = geo.pixel_to_map(rows, cols)
        inside = shapely.contains_xy(polygon, xs, ys)
        if not inside.any():
            dropped += 1
            continue
        labels[r0:r1 + 1, c0:c1 + 1][inside] = next_label
        sources.append(position)
        next_label += 1
    if dropped:
        logger.warning("dropped %d polygon(s) outside the raster extent", dropped)
    covered = [sources[label - 1] for label in np.setdiff1d(np.arange(1, next_label), labels)]
    if covered:
        logger.warning("dropped %d polygon(s) fully covered by later polygons, at input position(s) %s",
                       len(covered), covered)
    return InstanceMap(labels, geo=geo), dropped
