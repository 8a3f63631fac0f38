"""
Tiled execution of the smoothing and watershed stages for large rasters.

Smoothing runs per tile on a window padded by the halo; because the halo covers the Gaussian
kernel radius, each tile core is bitwise identical to smoothing the whole raster. Flooding never
leaves a connected mask component, so every component is flooded whole by the tile that owns its
bounding-box corner, with the global marker labels. Seams therefore need no merge step and the
result does not depend on tile size or worker count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from Postprocess.markers import markers_from_smoothed
from Postprocess.threshold_filter import label_components
from Postprocess.watershed import priority_flood, split_markers
from config.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class Tile:
    """A tile core [row0, row1) x [col0, col1) and its halo window [hrow0, hrow1) x [hcol0, hcol1)."""
    index: int
    row0: int
    col0: int
    row1: int
    col1: int
    hrow0: int
    hcol0: int
    hrow1: int
    hcol1: int

    @property
    def core(self):
        return slice(self.row0, self.row1), slice(self.col0, self.col1)

    @property
    def window(self):
        return slice(self.hrow0, self.hrow1), slice(self.hcol0, self.hcol1)

    @property
    def core_in_window(self):
        return (slice(self.row0 - self.hrow0, self.row1 - self.hrow0),
                slice(self.col0 - self.hcol0, self.col1 - self.hcol0))


def plan_tiles(shape, tile_size, halo):
    """
    Splits a raster into row-major tiles with clipped halos.

    Parameters:
      shape (tuple): (height, width).
      tile_size (int): Tile edge in pixels.
      halo (int): Overlap added on every side, clipped at the raster border.

    Returns:
      list of Tile: In row-major order.
    """
    height, width = shape
    tiles = []
    for row0 in range(0, height, tile_size):
        for col0 in range(0, width, tile_size):
            row1 = min(row0 + tile_size, height)
            col1 = min(col0 + tile_size, width)
            tiles.append(Tile(
                index=len(tiles), row0=row0, col0=col0, row1=row1, col1=col1,
                hrow0=max(row0 - halo, 0), hcol0=max(col0 - halo, 0),
                hrow1=min(row1 + halo, height), hcol1=min(col1 + halo, width),
            ))
    return tiles


def tile_of(tiles_per_row, tile_size, row, col):
    return (row // tile_size) * tiles_per_row + (col // tile_size)


def _smooth_tile(centroid_map, sigma, tile):
    window = ndimage.gaussian_filter(centroid_map[tile.window], sigma=sigma)
    return window[tile.core_in_window]


def smooth_tiled(centroid_map, sigma, tiles, executor):
    smoothed = np.empty(centroid_map.shape, dtype=np.float64)
    parts = executor.map(lambda tile: _smooth_tile(centroid_map, sigma, tile), tiles)
    for tile, part in zip(tiles, parts):
        smoothed[tile.core] = part
    return smoothed


def _flood_components(owned, components, windows, seeds_by_component, elevation, connectivity):
    results = []
    for component in owned:
        window = windows[component - 1]
        member = components[window] == component
        row0, col0 = window[0].start, window[1].start
        seeds = [(row - row0, col - col0, label) for row, col, label in seeds_by_component.get(component, [])]
        local = priority_flood(member, seeds, elevation[window], connectivity)
        results.append((window, member, local))
    return results


def segment_tiled(mask, centroid_map, cfg, threads=1):
    """
    Runs marker extraction and watershed over tiles.

    Parameters:
      mask (np.ndarray): Filtered binary mask.
      centroid_map (np.ndarray): Predicted centroid heatmap.
      cfg (PipelineConfig): Pipeline parameters, including tile_size and tile_halo.
      threads (int): Worker cap.

    Returns:
      tuple: (int32 labels, MarkerSet, discarded marker count).
    """
    mask = np.asarray(mask, dtype=bool)
    centroid_map = np.asarray(centroid_map, dtype=np.float64)
    tiles = plan_tiles(mask.shape, cfg.tile_size, cfg.tile_halo)
    tiles_per_row = -(-mask.shape[1] // cfg.tile_size)
    logger.debug("segmenting %dx%d raster in %d tile(s)", mask.shape[0], mask.shape[1], len(tiles))

    with ThreadPoolExecutor(max_workers=threads) as executor:
        smoothed = smooth_tiled(centroid_map, cfg.smooth_sigma, tiles, executor)
        marker_set = markers_from_smoothed(smoothed, mask, cfg)
        kept, discarded = split_markers(mask, marker_set)

        components, count = label_components(mask, cfg.connectivity)
        windows = ndimage.find_objects(components)
        seeds_by_component = {}
        for label, (row, col) in enumerate(kept, start=1):
            seeds_by_component.setdefault(int(components[row, col]), []).append((row, col, label))

        owned = [[] for _ in tiles]
        for component, window in enumerate(windows, start=1):
            if component in seeds_by_component:
                owned[tile_of(tiles_per_row, cfg.tile_size, window[0].start, window[1].start)].append(component)

        elevation = -smoothed
        jobs = executor.map(
            lambda comps: _flood_components(comps, components, windows, seeds_by_component, elevation,
                                            cfg.connectivity),
            owned)
        labels = np.zeros(mask.shape, dtype=np.int32)
        for results in jobs:
            for window, member, local in results:
                labels[window][member] = local[member]
    return labels, marker_set, discarded
