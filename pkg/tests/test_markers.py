import numpy as np
import pytest

from Postprocess.markers import Marker, extract_markers, peak_candidates, select_peaks
from Postprocess.pipeline_config import PipelineConfig
from Targets.heatmap import render_centroid_heatmap
from config.exceptions import DimensionError

SHAPE = (24, 30)


def _bumps(*peaks, sigma=1.0):
    """Max-combined Gaussian bumps given as (row, col, amplitude)."""
    heatmap = np.zeros(SHAPE)
    for row, col, amplitude in peaks:
        heatmap = np.maximum(heatmap, amplitude * render_centroid_heatmap([(row, col)], sigma, SHAPE))
    return heatmap


def _config(**values):
    values.setdefault("smooth_sigma", 0.5)
    return PipelineConfig(**values)


def test_zero_map_has_no_markers():
    markers = extract_markers(np.zeros(SHAPE), np.ones(SHAPE, dtype=bool), _config())
    assert len(markers) == 0
    assert markers.smoothed.shape == SHAPE


def test_single_bump_gives_one_marker_at_its_centre():
    markers = extract_markers(_bumps((10, 12, 1.0), sigma=2.0), np.ones(SHAPE, dtype=bool), _config(smooth_sigma=1.0))
    assert markers.positions() == [(10, 12)]


def test_weaker_peak_within_min_distance_is_suppressed():
    heatmap = _bumps((10, 10, 1.0), (10, 14, 0.6))
    mask = np.ones(SHAPE, dtype=bool)
    assert extract_markers(heatmap, mask, _config(peak_min_distance=5)).positions() == [(10, 10)]
    assert extract_markers(heatmap, mask, _config(peak_min_distance=3)).positions() == [(10, 10), (10, 14)]


def test_peaks_exactly_min_distance_apart_both_survive():
    heatmap = _bumps((10, 10, 1.0), (10, 14, 0.6))
    markers = extract_markers(heatmap, np.ones(SHAPE, dtype=bool), _config(peak_min_distance=4))
    assert len(markers) == 2


def test_chebyshev_metric_suppresses_diagonal_neighbours():
    heatmap = _bumps((8, 8, 1.0), (11, 11, 0.8))
    mask = np.ones(SHAPE, dtype=bool)
    assert len(extract_markers(heatmap, mask, _config(peak_min_distance=4))) == 2
    assert len(extract_markers(heatmap, mask, _config(peak_min_distance=4, peak_metric="chebyshev"))) == 1


def test_markers_come_strongest_first():
    heatmap = _bumps((5, 5, 0.5), (15, 20, 0.9), (18, 6, 0.7))
    markers = extract_markers(heatmap, np.ones(SHAPE, dtype=bool), _config())
    assert markers.positions() == [(15, 20), (18, 6), (5, 5)]
    intensities = [m.intensity for m in markers]
    assert intensities == sorted(intensities, reverse=True)


def test_peaks_below_min_intensity_are_ignored():
    heatmap = _bumps((10, 10, 1.0), (10, 22, 0.05))
    markers = extract_markers(heatmap, np.ones(SHAPE, dtype=bool), _config())
    assert markers.positions() == [(10, 10)]


def test_peaks_outside_the_mask_are_ignored():
    heatmap = _bumps((10, 10, 1.0), (10, 22, 0.8))
    mask = np.zeros(SHAPE, dtype=bool)
    mask[:, 16:] = True
    assert extract_markers(heatmap, mask, _config()).positions() == [(10, 22)]


def test_equal_candidates_are_ordered_by_position():
    smoothed = np.zeros((5, 5))
    smoothed[3, 1] = smoothed[1, 3] = 0.5
    candidates = peak_candidates(smoothed, np.ones((5, 5), dtype=bool), 0.1)
    assert [(m.row, m.col) for m in candidates] == [(1, 3), (3, 1)]


def test_greedy_selection_keeps_transitively_distant_peaks():
    candidates = [Marker(0, 0, 0.9), Marker(0, 3, 0.8), Marker(0, 6, 0.7)]
    accepted = select_peaks(candidates, 5, "euclidean")
    assert [(m.row, m.col) for m in accepted] == [(0, 0), (0, 6)]


def test_shapes_must_agree():
    with pytest.raises(DimensionError):
        extract_markers(np.zeros((3, 3)), np.ones((3, 4), dtype=bool), _config())
