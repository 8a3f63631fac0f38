import numpy as np
from scipy import ndimage

from config.constants import DEFAULT_CONNECTIVITY
from config.exceptions import ParameterError


def connectivity_structure(connectivity=DEFAULT_CONNECTIVITY):
    if connectivity == 4:
        return ndimage.generate_binary_structure(2, 1)
    elif connectivity == 8:
        return ndimage.generate_binary_structure(2, 2)
    else:
        raise ParameterError(f"connectivity must be 4 or 8, got {connectivity}")


def label_components(mask, connectivity=DEFAULT_CONNECTIVITY):
    """
    Labels connected components of a binary mask in raster scan order.

    Returns:
      tuple: (int32 labels, component count).
    """
    labels, count = ndimage.label(np.asarray(mask, dtype=bool), structure=connectivity_structure(connectivity))
    return labels.astype(np.int32, copy=False), int(count)


def remove_small_components(mask, min_area, connectivity=DEFAULT_CONNECTIVITY):
    labels, count = label_components(mask, connectivity)
    if count == 0:
        return np.zeros(labels.shape, dtype=bool)
    areas = np.bincount(labels.ravel(), minlength=count + 1)
    keep = areas >= min_area
    keep[0] = False
    return keep[labels]


def threshold_and_filter(seg_prob, cfg):
    """
    Thresholds the segmentation probability and drops components below the minimum area.

    Parameters:
      seg_prob (np.ndarray): Probabilities in [0, 1].
      cfg (PipelineConfig): Supplies seg_threshold, min_area and connectivity.

    Returns:
      np.ndarray: Boolean mask; a pixel is set iff seg_prob >= seg_threshold and its component
                  has at least min_area pixels.
    """
    mask = np.asarray(seg_prob) >= cfg.seg_threshold
    return remove_small_components(mask, cfg.min_area, cfg.connectivity)
