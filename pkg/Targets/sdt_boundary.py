import numpy as np
from scipy import ndimage

from config.constants import BOUNDARY_VALUE


def boundary_pixels(labels):
    """
    Marks foreground pixels that have a 4-neighbour with a different label or background.

    Pixels on the raster edge count the outside as background, so every instance gets a closed
    one-pixel boundary.

    Parameters:
      labels (np.ndarray): 2D integer labels.

    Returns:
      np.ndarray: Boolean boundary mask.
    """
    padded = np.pad(labels, 1, mode="constant", constant_values=0)
    centre = padded[1:-1, 1:-1]
    differs = ((padded[:-2, 1:-1] != centre) | (padded[2:, 1:-1] != centre)
               | (padded[1:-1, :-2] != centre) | (padded[1:-1, 2:] != centre))
    return (centre > 0) & differs


def compute_sdt_boundary(instance_map):
    """
    Builds the hybrid SDT-boundary map of an InstanceMap.

    Boundary pixels get -1. Every other pixel of an instance gets its Euclidean distance to that
    instance's boundary set divided by the instance's largest such distance, so the deepest pixel
    is exactly +1. Background stays 0.

    Parameters:
      instance_map (InstanceMap): Labelled instances.

    Returns:
      np.ndarray: float64 map in [-1, 1].
    """
    labels = instance_map.labels
    hybrid = np.zeros(labels.shape, dtype=np.float64)
    if not labels.any():
        return hybrid
    boundary = boundary_pixels(labels)
    hybrid[boundary] = BOUNDARY_VALUE
    for index, window in enumerate(ndimage.find_objects(labels), start=1):
        if window is None:
            continue
        member = labels[window] == index
        edge = boundary[window] & member
        interior = member & ~edge
        if not interior.any():
            continue
        # Only this instance's boundary pixels act as zeros.
        distance = ndimage.distance_transform_edt(~edge)
        depth = distance[interior]
        out = hybrid[window]
        out[interior] = depth / depth.max()
    return hybrid
