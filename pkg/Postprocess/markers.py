from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from config.constants import PEAK_METRIC_CHEBYSHEV
from config.exceptions import DimensionError


@dataclass(frozen=True)
class Marker:
    row: int
    col: int
    intensity: float


@dataclass
class MarkerSet:
    """
    Watershed seeds in acceptance order.

    Attributes:
      markers (list of Marker): Accepted peaks, strongest first.
      smoothed (np.ndarray): The smoothed centroid map the peaks were read from.
    """
    markers: list = field(default_factory=list)
    smoothed: np.ndarray = None

    def __len__(self):
        return len(self.markers)

    def __iter__(self):
        return iter(self.markers)

    def positions(self):
        return [(m.row, m.col) for m in self.markers]


def smooth_centroid_map(centroid_map, sigma):
    return ndimage.gaussian_filter(np.asarray(centroid_map, dtype=np.float64), sigma=sigma)


def peak_candidates(smoothed, mask, min_intensity):
    """
    Lists masked pixels that equal the 3x3 maximum of the masked smoothed map.

    Returns:
      list of Marker: Sorted by intensity descending, ties by (row, col).
    """
    masked = np.where(mask, smoothed, -np.inf)
    local_max = ndimage.maximum_filter(masked, size=3, mode="constant", cval=-np.inf)
    is_peak = mask & (masked == local_max) & (masked >= min_intensity)
    rows, cols = np.nonzero(is_peak)
    values = smoothed[rows, cols]
    order = np.lexsort((cols, rows, -values))
    return [Marker(int(rows[i]), int(cols[i]), float(values[i])) for i in order]


def select_peaks(candidates, min_distance, metric):
    """
    Greedy non-maximum suppression: a candidate is accepted unless it lies closer than
    min_distance to an already accepted one.
    """
    if not candidates:
        return []
    points = np.array([(m.row, m.col) for m in candidates], dtype=np.float64)
    tree = cKDTree(points)
    norm = np.inf if metric == PEAK_METRIC_CHEBYSHEV else 2
    # Strictly closer than min_distance suppresses.
    radius = np.nextafter(float(min_distance), 0.0)
    suppressed = np.zeros(len(candidates), dtype=bool)
    accepted = []
    for index, candidate in enumerate(candidates):
        if suppressed[index]:
            continue
        accepted.append(candidate)
        suppressed[tree.query_ball_point(points[index], r=radius, p=norm)] = True
    return accepted


def extract_markers(centroid_map, mask, cfg):
    """
    Finds watershed markers as greedy-selected local maxima of the smoothed centroid map.

    Parameters:
      centroid_map (np.ndarray): Predicted centroid heatmap.
      mask (np.ndarray): Binary mask; peaks outside it are ignored.
      cfg (PipelineConfig): Supplies smooth_sigma, peak_min_distance, peak_min_intensity, peak_metric.

    Returns:
      MarkerSet: Accepted peaks (possibly empty) and the smoothed map.
    """
    centroid_map = np.asarray(centroid_map, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if centroid_map.shape != mask.shape:
        raise DimensionError(f"Centroid map shape {centroid_map.shape} != mask shape {mask.shape}")
    smoothed = smooth_centroid_map(centroid_map, cfg.smooth_sigma)
    return markers_from_smoothed(smoothed, mask, cfg)


def markers_from_smoothed(smoothed, mask, cfg):
    candidates = peak_candidates(smoothed, mask, cfg.peak_min_intensity)
    markers = select_peaks(candidates, cfg.peak_min_distance, cfg.peak_metric)
    return MarkerSet(markers=markers, smoothed=smoothed)
