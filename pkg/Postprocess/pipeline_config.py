import dataclasses
from dataclasses import asdict, dataclass

from config.constants import (DEFAULT_BOUNDARY_PRESENCE_FRACTION, DEFAULT_BOUNDARY_THRESHOLD, DEFAULT_CONNECTIVITY,
                              DEFAULT_MIN_AREA, DEFAULT_PEAK_MIN_DISTANCE, DEFAULT_PEAK_MIN_INTENSITY,
                              DEFAULT_SEG_THRESHOLD, DEFAULT_SMOOTH_SIGMA, DEFAULT_TILE_HALO, DEFAULT_TILE_SIZE,
                              FINAL_SEGMENTATION, PEAK_METRIC_EUCLIDEAN, PEAK_METRICS, RAW_SEGMENTS,
                              SEGMENT_FILTERING, STAGE_CHOICES, STAGE_FILTERING, STAGE_FLAGS, STAGE_HYBRID_FILTERING,
                              STAGE_WATERSHED, VECTORIZE_CONTOUR, VECTORIZE_MODES, WATERSHED_SEGMENTATION)
from config.exceptions import ParameterError
from config.utils import dataclass_from_dict, load_json_config

GAUSSIAN_TRUNCATE = 4.0


def gaussian_radius(sigma):
    """Kernel radius scipy.ndimage.gaussian_filter uses for the default truncation."""
    return int(GAUSSIAN_TRUNCATE * float(sigma) + 0.5)


@dataclass(frozen=True)
class PipelineConfig:
    """
    Parameters of the hybrid postprocessing pipeline.

    Attributes:
      seg_threshold (float): Probability threshold in (0, 1).
      min_area (int): Minimum connected-component area in pixels (>= 1).
      boundary_threshold (float): Hybrid values at or below it are boundary cues; in (-1, 0).
      boundary_presence_fraction (float): Fraction of a region's pixels that must be near a cue.
      smooth_sigma (float): Gaussian smoothing of the centroid map, pixels (> 0).
      peak_min_distance (float): Minimum distance between accepted markers, pixels (>= 1).
      peak_min_intensity (float): Minimum smoothed intensity of a marker, in (0, 1).
      peak_metric (str): "euclidean" or "chebyshev".
      connectivity (int): 4 or 8.
      stages (tuple): Enabled stage flags among "filtering", "hybrid_filtering", "watershed".
      tile_size (int): Tile edge in pixels for large rasters.
      tile_halo (int): Tile overlap in pixels; must cover the smoothing kernel.
      vectorize_mode (str): "contour" or "ellipse".
    """
    seg_threshold: float = DEFAULT_SEG_THRESHOLD
    min_area: int = DEFAULT_MIN_AREA
    boundary_threshold: float = DEFAULT_BOUNDARY_THRESHOLD
    boundary_presence_fraction: float = DEFAULT_BOUNDARY_PRESENCE_FRACTION
    smooth_sigma: float = DEFAULT_SMOOTH_SIGMA
    peak_min_distance: float = DEFAULT_PEAK_MIN_DISTANCE
    peak_min_intensity: float = DEFAULT_PEAK_MIN_INTENSITY
    peak_metric: str = PEAK_METRIC_EUCLIDEAN
    connectivity: int = DEFAULT_CONNECTIVITY
    stages: tuple = STAGE_FLAGS
    tile_size: int = DEFAULT_TILE_SIZE
    tile_halo: int = DEFAULT_TILE_HALO
    vectorize_mode: str = VECTORIZE_CONTOUR

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        self.validate()

    def validate(self):
        if not 0 < self.seg_threshold < 1:
            raise ParameterError(f"seg_threshold must lie in (0, 1), got {self.seg_threshold}")
        if int(self.min_area) != self.min_area or self.min_area < 1:
            raise ParameterError(f"min_area must be an integer >= 1, got {self.min_area}")
        if not -1 < self.boundary_threshold < 0:
            raise ParameterError(f"boundary_threshold must lie in (-1, 0), got {self.boundary_threshold}")
        if not 0 <= self.boundary_presence_fraction <= 1:
            raise ParameterError(
                f"boundary_presence_fraction must lie in [0, 1], got {self.boundary_presence_fraction}")
        if not self.smooth_sigma > 0:
            raise ParameterError(f"smooth_sigma must be positive, got {self.smooth_sigma}")
        if not self.peak_min_distance >= 1:
            raise ParameterError(f"peak_min_distance must be >= 1, got {self.peak_min_distance}")
        if not 0 < self.peak_min_intensity < 1:
            raise ParameterError(f"peak_min_intensity must lie in (0, 1), got {self.peak_min_intensity}")
        if self.peak_metric not in PEAK_METRICS:
            raise ParameterError(f"peak_metric must be one of {PEAK_METRICS}, got {self.peak_metric!r}")
        if self.connectivity not in (4, 8):
            raise ParameterError(f"connectivity must be 4 or 8, got {self.connectivity}")
        unknown = [stage for stage in self.stages if stage not in STAGE_FLAGS]
        if unknown:
            raise ParameterError(f"Unknown stage flags {unknown}; expected a subset of {STAGE_FLAGS}")
        if int(self.tile_size) != self.tile_size or self.tile_size < 1:
            raise ParameterError(f"tile_size must be a positive integer, got {self.tile_size}")
        if self.tile_halo < gaussian_radius(self.smooth_sigma):
            raise ParameterError(f"tile_halo {self.tile_halo} is smaller than the smoothing radius "
                                 f"{gaussian_radius(self.smooth_sigma)}")
        if self.vectorize_mode not in VECTORIZE_MODES:
            raise ParameterError(f"vectorize_mode must be one of {VECTORIZE_MODES}, got {self.vectorize_mode!r}")

    @property
    def filtering(self):
        return STAGE_FILTERING in self.stages

    @property
    def hybrid_filtering(self):
        return STAGE_HYBRID_FILTERING in self.stages

    @property
    def watershed(self):
        return STAGE_WATERSHED in self.stages

    def with_stages(self, choice):
        return dataclasses.replace(self, stages=stage_flags(choice))

    def to_dict(self):
        values = asdict(self)
        values["stages"] = list(self.stages)
        return values

    @classmethod
    def from_dict(cls, values):
        return dataclass_from_dict(cls, values)

    @classmethod
    def from_json(cls, path, overrides=None):
        return load_json_config(path, cls, overrides)


def stage_flags(choice):
    """
    Maps an ablation row name to its stage flags.

    Parameters:
      choice (str): One of "raw", "filter", "watershed", "final".

    Returns:
      tuple: The enabled stage flags.
    """
    if choice == RAW_SEGMENTS:
        return ()
    elif choice == SEGMENT_FILTERING:
        return STAGE_FILTERING, STAGE_HYBRID_FILTERING
    elif choice == WATERSHED_SEGMENTATION:
        return (STAGE_WATERSHED,)
    elif choice == FINAL_SEGMENTATION:
        return STAGE_FLAGS
    else:
        raise ParameterError(f"Invalid stage choice {choice!r}; expected one of {STAGE_CHOICES}")


def stage_config(choice, base=None):
    """Returns base (or the default config) with the stage flags of an ablation row."""
    return (base or PipelineConfig()).with_stages(choice)
