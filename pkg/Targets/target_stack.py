from dataclasses import dataclass

import numpy as np

from RasterCore.raster import InstanceMap, MultiChannelRaster
from Targets.heatmap import render_centroid_heatmap
from Targets.rasterize import rasterize_polygons
from Targets.sdt_boundary import boundary_pixels, compute_sdt_boundary
from config.constants import BOUNDARY_VALUE, DEFAULT_HEATMAP_SIGMA, STACK_ROLES


@dataclass
class TargetStack:
    """
    Supervision rasters for the three network heads plus the instance labels they came from.

    Attributes:
      mask (np.ndarray): Binary crown mask (channel 0).
      centroid_heatmap (np.ndarray): Gaussian centroid heatmap in [0, 1] (channel 1).
      hybrid_map (np.ndarray): SDT-boundary map in [-1, 1] (channel 2).
      instance_map (InstanceMap): Sidecar labels, not a network target.
      centroids_px (list): (row, col) of each kept annotation's centroid.
      dropped (int): Annotations that fell outside the raster.
    """
    mask: np.ndarray
    centroid_heatmap: np.ndarray
    hybrid_map: np.ndarray
    instance_map: InstanceMap
    centroids_px: list
    dropped: int = 0

    @property
    def geo(self):
        return self.instance_map.geo

    @property
    def shape(self):
        return self.mask.shape

    def as_array(self):
        """Returns the (height, width, 3) float64 stack in (mask, centroid, hybrid) order."""
        return np.stack([self.mask.astype(np.float64), self.centroid_heatmap, self.hybrid_map], axis=-1)

    def to_raster(self, metadata=None):
        return MultiChannelRaster(self.as_array(), geo=self.geo, channel_roles=STACK_ROLES,
                                  metadata=metadata)


def build_target_stack(annotations, geo, shape, sigma=DEFAULT_HEATMAP_SIGMA):
    """
    Generates the mask, centroid heatmap and hybrid SDT-boundary targets from annotations.

    Parameters:
      annotations (list of Annotation): Polygons and centroids in map units.
      geo (GeoTransform): Georeferencing of the target raster.
      shape (tuple): (height, width) in pixels.
      sigma (float): Heatmap kernel width in pixels.

    Returns:
      TargetStack: The composed targets.
    """
    instance_map, dropped = rasterize_polygons(annotations, geo, shape)
    centroids = []
    for annotation in annotations:
        row, col = geo.map_to_pixel(*annotation.centroid)
        row, col = float(row), float(col)
        if -0.5 <= row < shape[0] - 0.5 and -0.5 <= col < shape[1] - 0.5:
            centroids.append((row, col))
    return TargetStack(
        mask=instance_map.mask().astype(np.uint8),
        centroid_heatmap=render_centroid_heatmap(centroids, sigma, shape),
        hybrid_map=compute_sdt_boundary(instance_map),
        instance_map=instance_map,
        centroids_px=centroids,
        dropped=dropped,
    )


def check_target_stack(stack):
    """
    Lists every TargetStack invariant the stack violates.

    Parameters:
      stack (TargetStack): The stack to check.

    Returns:
      list of str: Human-readable violations; empty when the stack is valid.
    """
    violations = []
    labels = stack.instance_map.labels
    if not np.array_equal(stack.mask.astype(bool), labels > 0):
        violations.append("mask disagrees with instance labels")
    heatmap = stack.centroid_heatmap
    if heatmap.size and (heatmap.min() < 0 or heatmap.max() > 1):
        violations.append("heatmap outside [0, 1]")
    hybrid = stack.hybrid_map
    if hybrid.size and (hybrid.min() < -1 or hybrid.max() > 1):
        violations.append("hybrid map outside [-1, 1]")
    boundary = boundary_pixels(labels)
    if not np.all(hybrid[boundary] == BOUNDARY_VALUE):
        violations.append("boundary pixel not exactly -1")
    if np.any(hybrid[labels == 0] != 0):
        violations.append("background hybrid value not 0")
    for instance_id in stack.instance_map.ids():
        member = labels == instance_id
        interior = member & ~boundary
        if interior.any() and hybrid[interior].max() != 1.0:
            violations.append(f"instance {instance_id} interior maximum is not +1")
    return violations
