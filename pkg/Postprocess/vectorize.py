import math

import numpy as np
import shapely
from scipy import ndimage
from shapely import affinity
from shapely.geometry import Point, Polygon
from skimage.measure import regionprops

from Metrics.shape_stats import compactness
from RasterCore.raster import Instance, InstanceSet
from config.constants import VECTORIZE_CONTOUR, VECTORIZE_ELLIPSE, VECTORIZE_MODES
from config.exceptions import ParameterError
from config.logger import get_logger

logger = get_logger(__name__)

# Ellipse semi-axes never shrink below half a pixel, so one-pixel-wide instances keep an area.
MIN_SEMI_AXIS = 0.5
ELLIPSE_QUAD_SEGMENTS = 16
# Growth, in pixels, that joins pieces of an outline meeting only at a corner.
OUTLINE_HAIR = 1e-6


def _edge_to_map(geometry, geo):
    # Pixel-edge space (col, row) -> map (x, y); row grows southward.
    return affinity.affine_transform(
        geometry, [geo.pixel_size_x, 0.0, 0.0, -geo.pixel_size_y, geo.origin_x, geo.origin_y])


def pixel_outline(member, row0=0, col0=0):
    """
    Traces the outer pixel-edge ring of a pixel set.

    The horizontal runs are unioned. Pieces that meet only at a pixel corner are joined by growing
    the outline by OUTLINE_HAIR, and holes are filled. Pieces that do not touch at all keep the
    ring of the largest one.

    Parameters:
      member (np.ndarray): Boolean window of the pixel set.
      row0, col0 (int): Offset of the window in the raster.

    Returns:
      shapely Polygon without interiors in pixel-edge coordinates (x = col, y = row). For a
      4-connected set without holes its area equals the pixel count exactly.
    """
    padded = np.pad(member.astype(np.int8), ((0, 0), (1, 1)))
    steps = np.diff(padded, axis=1)
    starts = np.argwhere(steps == 1)
    ends = np.argwhere(steps == -1)
    rows = starts[:, 0] + row0
    boxes = shapely.box(starts[:, 1] + col0, rows, ends[:, 1] + col0, rows + 1)
    outline = shapely.union_all(boxes)
    if outline.geom_type != "Polygon":
        outline = outline.buffer(OUTLINE_HAIR, join_style="mitre")
        if outline.geom_type != "Polygon":
            logger.debug("pixel set at (%d, %d) has %d separate pieces; keeping the largest",
                         row0, col0, len(outline.geoms))
            outline = max(outline.geoms, key=lambda piece: piece.area)
    return Polygon(outline.exterior)


def _ellipse(props):
    row, col = props.centroid
    semi_major = max(props.axis_major_length / 2.0, MIN_SEMI_AXIS)
    semi_minor = max(props.axis_minor_length / 2.0, MIN_SEMI_AXIS)
    # orientation is measured from the row axis; the outline is built in (col, row) space.
    angle = math.atan2(math.cos(props.orientation), math.sin(props.orientation))
    circle = Point(0.0, 0.0).buffer(1.0, quad_segs=ELLIPSE_QUAD_SEGMENTS)
    ellipse = affinity.scale(circle, semi_major, semi_minor, origin=(0.0, 0.0))
    ellipse = affinity.rotate(ellipse, angle, origin=(0.0, 0.0), use_radians=True)
    # Pixel centres sit at integer indices, half a pixel inside their edges.
    return affinity.translate(ellipse, col + 0.5, row + 0.5)


def vectorize(instances, geo=None, mode=VECTORIZE_CONTOUR):
    """
    Converts an InstanceMap to vector instances.

    Contour mode traces the outer pixel-edge ring of each instance, one closed ring per instance.
    area_px is always the pixel count.
    Ellipse mode fits an ellipse from the second central moments of the pixel coordinates.
    Centroids are the mean pixel coordinates in both modes.

    Parameters:
      instances (InstanceMap): Labelled instances.
      geo (GeoTransform, optional): Defaults to the InstanceMap's own transform.
      mode (str): "contour" or "ellipse".

    Returns:
      InstanceSet: One Instance per label, in label order.
    """
    if mode not in VECTORIZE_MODES:
        raise ParameterError(f"Vectorize mode must be one of {VECTORIZE_MODES}, got {mode!r}")
    geo = geo or instances.geo
    labels = instances.labels
    result = InstanceSet(instances=[], geo=geo)
    if not labels.any():
        return result

    ellipses = {}
    if mode == VECTORIZE_ELLIPSE:
        ellipses = {props.label: _ellipse(props) for props in regionprops(labels)}

    for label, window in enumerate(ndimage.find_objects(labels), start=1):
        if window is None:
            continue
        member = labels[window] == label
        rows, cols = np.nonzero(member)
        row0, col0 = window[0].start, window[1].start
        centroid_px = (float(rows.mean() + row0), float(cols.mean() + col0))
        x, y = geo.pixel_to_map(*centroid_px)
        area_px = float(rows.size)
        if mode == VECTORIZE_ELLIPSE:
            outline = ellipses[label]
        else:
            outline = pixel_outline(member, row0, col0)
        polygon = _edge_to_map(outline, geo)
        result.instances.append(Instance(
            id=label,
            polygon=polygon,
            centroid_px=centroid_px,
            centroid_map=(float(x), float(y)),
            area_px=area_px,
            area_map=area_px * geo.pixel_area,
            compactness=compactness(polygon),
        ))
    return result
