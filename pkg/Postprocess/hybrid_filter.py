import numpy as np
from scipy import ndimage

from Postprocess.threshold_filter import label_components
from config.exceptions import DimensionError
from config.logger import get_logger

logger = get_logger(__name__)


def hybrid_filter(mask, hybrid_map, cfg):
    """
    Suppresses mask regions that show no boundary cue in the hybrid map.

    Boundary cues are pixels with hybrid value <= boundary_threshold. A region (connected component
    of mask) survives iff at least boundary_presence_fraction of its pixels lie within one pixel
    (8-neighbourhood) of a cue.

    Parameters:
      mask (np.ndarray): Binary mask.
      hybrid_map (np.ndarray): Predicted hybrid map.
      cfg (PipelineConfig): Supplies boundary_threshold, boundary_presence_fraction, connectivity.

    Returns:
      np.ndarray: Boolean mask with suppressed regions zeroed.
    """
    mask = np.asarray(mask, dtype=bool)
    hybrid_map = np.asarray(hybrid_map)
    if mask.shape != hybrid_map.shape:
        raise DimensionError(f"Mask shape {mask.shape} != hybrid map shape {hybrid_map.shape}")
    labels, count = label_components(mask, cfg.connectivity)
    if count == 0:
        return mask.copy()
    cues = hybrid_map <= cfg.boundary_threshold
    near = ndimage.binary_dilation(cues, structure=np.ones((3, 3), dtype=bool))
    flat = labels.ravel()
    areas = np.bincount(flat, minlength=count + 1)
    near_counts = np.bincount(flat, weights=near.ravel(), minlength=count + 1)
    keep = np.zeros(count + 1, dtype=bool)
    keep[1:] = near_counts[1:] >= cfg.boundary_presence_fraction * areas[1:]
    suppressed = count - int(np.count_nonzero(keep))
    if suppressed:
        logger.debug("hybrid filter suppressed %d of %d regions", suppressed, count)
    return keep[labels]
