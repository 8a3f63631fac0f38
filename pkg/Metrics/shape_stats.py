import math

import numpy as np

from config.constants import SQUARE_METERS_PER_HECTARE
from config.exceptions import ParameterError, ValidationError


def compactness(polygon):
    """
    Compactness 4*pi*area/perimeter^2 of a polygon, clamped to (0, 1].

    Parameters:
      polygon: shapely Polygon or MultiPolygon.

    Returns:
      float: 1 for a circle, pi/4 for a square, smaller for elongated shapes.

    Raises:
      ValidationError: If the polygon has no perimeter or no area.
    """
    perimeter = polygon.length
    area = polygon.area
    if perimeter <= 0 or area <= 0:
        raise ValidationError("Compactness is undefined for a degenerate polygon")
    return min(1.0, 4.0 * math.pi * area / (perimeter * perimeter))


def segment_size_histogram(instance_set, bins=10, value_range=None):
    """
    Histogram of segment areas in map units squared.

    Returns:
      tuple: (counts, bin edges) as returned by numpy.histogram.
    """
    areas = np.array([inst.area_map for inst in instance_set], dtype=np.float64)
    return np.histogram(areas, bins=bins, range=value_range)


def compactness_histogram(instance_set, bins=10):
    values = np.array([inst.compactness for inst in instance_set], dtype=np.float64)
    return np.histogram(values, bins=bins, range=(0.0, 1.0))


def centroid_density(instance_set, shape, cell=64):
    """
    Dead-tree density on a grid of square cells, in trees per hectare.

    Parameters:
      instance_set (InstanceSet): Instances with pixel centroids; its geotransform gives the pixel area.
      shape (tuple): (height, width) of the raster the instances come from.
      cell (int): Cell edge in pixels.

    Returns:
      np.ndarray: (ceil(H / cell), ceil(W / cell)) densities. Edge cells are normalised by their
                  clipped area.
    """
    if cell < 1:
        raise ParameterError(f"Density cell must be >= 1 pixel, got {cell}")
    height, width = shape
    n_rows, n_cols = -(-height // cell), -(-width // cell)
    counts = np.zeros((n_rows, n_cols), dtype=np.float64)
    for inst in instance_set:
        row = min(max(int(round(inst.centroid_px[0])), 0), height - 1)
        col = min(max(int(round(inst.centroid_px[1])), 0), width - 1)
        counts[row // cell, col // cell] += 1
    cell_rows = np.minimum(cell, height - np.arange(n_rows) * cell)
    cell_cols = np.minimum(cell, width - np.arange(n_cols) * cell)
    hectares = np.outer(cell_rows, cell_cols) * instance_set.geo.pixel_area / SQUARE_METERS_PER_HECTARE
    return counts / hectares
