import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage
from shapely.geometry import Polygon

from Postprocess.vectorize import vectorize
from RasterCore.annotations import Annotation
from RasterCore.raster import GeoTransform, InstanceSet, MultiChannelRaster
from Targets.target_stack import TargetStack, build_target_stack
from config.constants import (CROWN_ASPECT_RANGE, CROWN_GAP_PX, CROWN_HARMONIC_AMPLITUDE, CROWN_HARMONICS,
                              CROWN_VERTICES, DEFAULT_CROWN_RADIUS_RANGE, DEFAULT_DENSITY, DEFAULT_HEATMAP_SIGMA,
                              DEFAULT_PIXEL_SIZE, OVERLAP_DISTANCE_RANGE, PLACEMENT_RETRIES, SQUARE_METERS_PER_HECTARE,
                              STACK_ROLES)
from config.exceptions import ParameterError, PlacementError
from config.logger import get_logger
from config.utils import dataclass_from_dict, load_json_config

logger = get_logger(__name__)

# Largest radial excursion of a crown outline relative to its nominal radius.
MAX_EXTENT = 1.0 + CROWN_HARMONIC_AMPLITUDE * len(CROWN_HARMONICS)


@dataclass(frozen=True)
class SceneSpec:
    """
    Parameters of one synthetic scene.

    Attributes:
      extent (tuple): (height, width) in pixels.
      density (float): Dead trees per hectare (>= 0).
      crown_radius_range (tuple): (min, max) nominal crown radius in pixels.
      overlap_probability (float): Chance that a crown is placed against one already placed.
      noise_sigma (float | tuple): Gaussian noise per channel (segmentation, centroid, hybrid).
      blur_sigma (float): Blur of the segmentation and centroid channels, pixels.
      seed (int): Seed of the scene's random generator.
      pixel_size (float): Map units per pixel.
      origin (tuple): Map (x, y) of the top-left corner.
      heatmap_sigma (float): Target heatmap kernel width, pixels.
    """
    extent: tuple = (512, 512)
    density: float = DEFAULT_DENSITY
    crown_radius_range: tuple = DEFAULT_CROWN_RADIUS_RANGE
    overlap_probability: float = 0.0
    noise_sigma: tuple = (0.0, 0.0, 0.0)
    blur_sigma: float = 0.0
    seed: int = 0
    pixel_size: float = DEFAULT_PIXEL_SIZE
    origin: tuple = (0.0, 0.0)
    heatmap_sigma: float = DEFAULT_HEATMAP_SIGMA

    def __post_init__(self):
        noise = self.noise_sigma
        if np.isscalar(noise):
            noise = (noise,) * 3
        object.__setattr__(self, "noise_sigma", tuple(float(n) for n in noise))
        object.__setattr__(self, "extent", tuple(int(e) for e in self.extent))
        object.__setattr__(self, "crown_radius_range", tuple(float(r) for r in self.crown_radius_range))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        self.validate()

    def validate(self):
        if len(self.extent) != 2 or min(self.extent) < 1:
            raise ParameterError(f"extent must be two positive pixel counts, got {self.extent}")
        if not self.density >= 0:
            raise ParameterError(f"density must be >= 0, got {self.density}")
        low, high = self.crown_radius_range
        if not 0 < low <= high:
            raise ParameterError(f"crown_radius_range must satisfy 0 < min <= max, got {self.crown_radius_range}")
        if not 0 <= self.overlap_probability <= 1:
            raise ParameterError(f"overlap_probability must lie in [0, 1], got {self.overlap_probability}")
        if len(self.noise_sigma) != 3 or min(self.noise_sigma) < 0:
            raise ParameterError(f"noise_sigma must be >= 0 for each of 3 channels, got {self.noise_sigma}")
        if self.blur_sigma < 0:
            raise ParameterError(f"blur_sigma must be >= 0, got {self.blur_sigma}")
        if not self.pixel_size > 0:
            raise ParameterError(f"pixel_size must be positive, got {self.pixel_size}")
        if not self.heatmap_sigma > 0:
            raise ParameterError(f"heatmap_sigma must be positive, got {self.heatmap_sigma}")

    @property
    def geo(self):
        return GeoTransform(self.origin[0], self.origin[1], self.pixel_size, self.pixel_size)

    @property
    def hectares(self):
        return self.extent[0] * self.extent[1] * self.pixel_size ** 2 / SQUARE_METERS_PER_HECTARE

    def to_dict(self):
        values = asdict(self)
        for key in ("extent", "crown_radius_range", "noise_sigma", "origin"):
            values[key] = list(values[key])
        return values

    @classmethod
    def from_dict(cls, values):
        return dataclass_from_dict(cls, values)

    @classmethod
    def from_json(cls, path, overrides=None):
        return load_json_config(path, cls, overrides)


@dataclass
class Scene:
    """
    A generated scene.

    Attributes:
      spec (SceneSpec): The parameters it was generated from.
      annotations (list of Annotation): Crown polygons and centroids in map units.
      target_stack (TargetStack): Ground-truth targets.
      pred_stack (MultiChannelRaster): Simulated prediction (segmentation, centroid, hybrid).
      ground_truth (InstanceSet): Vectorised ground-truth instances.
    """
    spec: SceneSpec
    annotations: list
    target_stack: TargetStack
    pred_stack: MultiChannelRaster
    ground_truth: InstanceSet


@dataclass(frozen=True)
class _Crown:
    row: float
    col: float
    radius: float
    may_overlap: bool

    @property
    def extent(self):
        return self.radius * MAX_EXTENT


def crown_outline(rng, row, col, radius, vertices=CROWN_VERTICES):
    """
    Samples a perturbed ellipse: a rotated ellipse whose radius is modulated by low-order harmonics.

    Returns:
      np.ndarray: (vertices, 2) array of (row, col) pixel coordinates.
    """
    aspect = rng.uniform(*CROWN_ASPECT_RANGE)
    rotation = rng.uniform(0.0, math.pi)
    amplitudes = rng.uniform(0.0, CROWN_HARMONIC_AMPLITUDE, size=len(CROWN_HARMONICS))
    phases = rng.uniform(0.0, 2.0 * math.pi, size=len(CROWN_HARMONICS))
    theta = np.linspace(0.0, 2.0 * math.pi, vertices, endpoint=False)
    modulation = 1.0 + sum(a * np.cos(k * theta + p) for k, a, p in zip(CROWN_HARMONICS, amplitudes, phases))
    u = radius * modulation * np.cos(theta)
    v = radius * aspect * modulation * np.sin(theta)
    rows = row + u * math.sin(rotation) + v * math.cos(rotation)
    cols = col + u * math.cos(rotation) - v * math.sin(rotation)
    return np.column_stack([rows, cols])


def _fits(candidate, placed, anchor=None):
    for other in placed:
        if other is anchor:
            continue
        distance = math.hypot(candidate.row - other.row, candidate.col - other.col)
        if candidate.may_overlap and other.may_overlap:
            # Overlapping crowns keep each centre outside the other crown.
            if distance < max(candidate.extent, other.extent) + 2.0:
                return False
        elif distance < candidate.extent + other.extent + CROWN_GAP_PX:
            return False
    return True


def _inside(candidate, height, width):
    margin = candidate.extent + 1.0
    return margin <= candidate.row <= height - 1 - margin and margin <= candidate.col <= width - 1 - margin


def place_crowns(spec, rng):
    """
    Draws a Poisson number of crowns and places them by rejection sampling.

    A crown that may overlap is pushed against a randomly chosen crown that is already placed: its
    centre lands at 0.5 to 0.9 times the summed radii from that crown's centre, so in most draws the
    two outlines touch or overlap. The first crown is always placed uniformly.

    Raises:
      PlacementError: If a crown finds no free position within the retry budget.
    """
    height, width = spec.extent
    count = int(rng.poisson(spec.density * spec.hectares))
    placed = []
    for index in range(count):
        radius = rng.uniform(*spec.crown_radius_range)
        may_overlap = bool(rng.random() < spec.overlap_probability)
        margin = radius * MAX_EXTENT + 1.0
        if 2 * margin >= min(height, width):
            raise PlacementError(f"Crown radius {radius:.1f} px does not fit a {height}x{width} scene")
        for _ in range(PLACEMENT_RETRIES):
            anchor = None
            if may_overlap and placed:
                anchor = placed[int(rng.integers(len(placed)))]
                distance = rng.uniform(*OVERLAP_DISTANCE_RANGE) * (radius + anchor.radius)
                angle = rng.uniform(0.0, 2.0 * math.pi)
                candidate = _Crown(row=anchor.row + distance * math.sin(angle),
                                   col=anchor.col + distance * math.cos(angle),
                                   radius=radius, may_overlap=True)
            else:
                candidate = _Crown(row=rng.uniform(margin, height - 1 - margin),
                                   col=rng.uniform(margin, width - 1 - margin),
                                   radius=radius, may_overlap=may_overlap)
            if _inside(candidate, height, width) and _fits(candidate, placed, anchor):
                placed.append(candidate)
                break
        else:
            raise PlacementError(f"Could not place crown {index + 1} of {count} after {PLACEMENT_RETRIES} "
                                 f"attempts; density {spec.density}/ha is too high for the scene")
    return placed


def corrupt_targets(stack, spec, rng):
    """
    Simulates a network prediction: blur plus Gaussian noise on segmentation and centroid,
    noise only on the hybrid map, each clamped to its channel range.
    """
    seg_noise, centroid_noise, hybrid_noise = spec.noise_sigma
    channels = []
    for values, noise, low, high, blur in (
            (stack.mask.astype(np.float64), seg_noise, 0.0, 1.0, spec.blur_sigma),
            (stack.centroid_heatmap, centroid_noise, 0.0, 1.0, spec.blur_sigma),
            (stack.hybrid_map, hybrid_noise, -1.0, 1.0, 0.0)):
        channel = ndimage.gaussian_filter(values, sigma=blur) if blur > 0 else values.copy()
        if noise > 0:
            channel = channel + rng.normal(0.0, noise, size=channel.shape)
        channels.append(np.clip(channel, low, high))
    return MultiChannelRaster(np.stack(channels, axis=-1), geo=stack.geo, channel_roles=STACK_ROLES,
                              metadata={"scene": spec.to_dict()})


def generate_scene(spec):
    """
    Generates annotations, targets and a simulated prediction for one scene.

    Parameters:
      spec (SceneSpec): Scene parameters; the output is a pure function of them.

    Returns:
      Scene: The generated bundle.
    """
    rng = np.random.default_rng(spec.seed)
    geo = spec.geo
    annotations = []
    for crown in place_crowns(spec, rng):
        outline = crown_outline(rng, crown.row, crown.col, crown.radius)
        xs, ys = geo.pixel_to_map(outline[:, 0], outline[:, 1])
        polygon = Polygon(np.column_stack([xs, ys]))
        annotations.append(Annotation(polygon=polygon, centroid=(polygon.centroid.x, polygon.centroid.y)))
    stack = build_target_stack(annotations, geo, spec.extent, spec.heatmap_sigma)
    pred = corrupt_targets(stack, spec, rng)
    logger.debug("scene seed=%d: %d crown(s)", spec.seed, len(annotations))
    return Scene(spec=spec, annotations=annotations, target_stack=stack, pred_stack=pred,
                 ground_truth=vectorize(stack.instance_map))
