import heapq

import numpy as np

from RasterCore.raster import InstanceMap
from config.constants import DEFAULT_CONNECTIVITY
from config.exceptions import DimensionError
from config.logger import get_logger

logger = get_logger(__name__)

_NEIGHBORS_4 = ((-1, 0), (0, -1), (0, 1), (1, 0))
_NEIGHBORS_8 = ((-1, -1), (-1, 0), (-1, 1),
                (0, -1), (0, 1),
                (1, -1), (1, 0), (1, 1))


def neighbor_offsets(connectivity):
    return _NEIGHBORS_4 if connectivity == 4 else _NEIGHBORS_8


def priority_flood(mask, seeds, elevation, connectivity=DEFAULT_CONNECTIVITY, out=None):
    """
    Floods the mask from labelled seeds in ascending (elevation, insertion sequence) order.

    A pixel takes the label of the first flood that pushes it onto the queue. Seeds are pushed in
    the order given, so the sequence number breaks every elevation tie reproducibly.

    Parameters:
      mask (np.ndarray): Boolean mask; flooding never leaves it.
      seeds (list): (row, col, label) triples, all inside the mask.
      elevation (np.ndarray): Flooding surface, same shape as mask.
      connectivity (int): 4 or 8.
      out (np.ndarray, optional): int32 label array to write into; a new one is created if omitted.

    Returns:
      np.ndarray: int32 labels; masked pixels unreachable from any seed stay 0.
    """
    rows, cols = mask.shape
    labels = out if out is not None else np.zeros((rows, cols), dtype=np.int32)
    offsets = neighbor_offsets(connectivity)
    heap = []
    sequence = 0
    for row, col, label in seeds:
        if labels[row, col]:
            continue
        labels[row, col] = label
        heapq.heappush(heap, (float(elevation[row, col]), sequence, row, col))
        sequence += 1

    while heap:
        _, _, row, col = heapq.heappop(heap)
        label = labels[row, col]
        for dr, dc in offsets:
            nr, nc = row + dr, col + dc
            if 0 <= nr < rows and 0 <= nc < cols and mask[nr, nc] and not labels[nr, nc]:
                labels[nr, nc] = label
                heapq.heappush(heap, (float(elevation[nr, nc]), sequence, nr, nc))
                sequence += 1
    return labels


def split_markers(mask, markers):
    """
    Separates markers inside the mask from those outside it.

    Returns:
      tuple: (kept (row, col) list in marker order, discarded count).
    """
    kept = []
    discarded = 0
    rows, cols = mask.shape
    for row, col in _positions(markers):
        if 0 <= row < rows and 0 <= col < cols and mask[row, col]:
            kept.append((row, col))
        else:
            discarded += 1
    if discarded:
        logger.warning("discarded %d marker(s) outside the mask", discarded)
    return kept, discarded


def _positions(markers):
    if hasattr(markers, "positions"):
        return markers.positions()
    return [(int(m[0]), int(m[1])) for m in markers]


def watershed_segment(mask, markers, elevation, connectivity=DEFAULT_CONNECTIVITY, geo=None):
    """
    Marker-controlled watershed by priority flooding.

    Seeds are labelled 1..K in marker order (after discarding markers outside the mask). Masked
    components without a marker keep label 0.

    Parameters:
      mask (np.ndarray): Binary mask to partition.
      markers (MarkerSet | list): Seeds as a MarkerSet or (row, col[, ...]) tuples.
      elevation (np.ndarray): Flooding surface, normally the negated smoothed centroid map.
      connectivity (int): 4 or 8.
      geo (GeoTransform, optional): Georeferencing for the result.

    Returns:
      tuple: (InstanceMap, discarded marker count).
    """
    mask = np.asarray(mask, dtype=bool)
    elevation = np.asarray(elevation, dtype=np.float64)
    if mask.shape != elevation.shape:
        raise DimensionError(f"Mask shape {mask.shape} != elevation shape {elevation.shape}")
    kept, discarded = split_markers(mask, markers)
    seeds = [(row, col, label) for label, (row, col) in enumerate(kept, start=1)]
    labels = priority_flood(mask, seeds, elevation, connectivity)
    return InstanceMap(labels, geo=geo), discarded
