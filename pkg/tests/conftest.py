import numpy as np
import pytest
from shapely.geometry import Point

from RasterCore.annotations import Annotation
from RasterCore.raster import GeoTransform, MultiChannelRaster
from Synth.scene import SceneSpec, generate_scene
from Targets.target_stack import build_target_stack
from config.constants import STACK_ROLES


def disk_annotation(x, y, radius):
    return Annotation(polygon=Point(x, y).buffer(radius, quad_segs=32), centroid=(x, y))


def as_prediction(stack):
    """Uses a target stack as a perfect prediction."""
    return MultiChannelRaster(stack.as_array(), geo=stack.geo, channel_roles=STACK_ROLES)


def random_blobs(rng, shape, fill=0.45):
    noise = rng.random(shape)
    return noise < fill


@pytest.fixture
def grid():
    return GeoTransform(0.0, 64.0, 1.0, 1.0)


@pytest.fixture
def overlapping_crowns(grid):
    """Two radius-8 crowns with centres 12 pixels apart; their masks form one component."""
    annotations = [disk_annotation(20.5, 32.5, 8.0), disk_annotation(32.5, 32.5, 8.0)]
    return build_target_stack(annotations, grid, (64, 64))


@pytest.fixture
def separate_crowns(grid):
    annotations = [disk_annotation(16.5, 16.5, 6.0), disk_annotation(44.5, 40.5, 7.0),
                   disk_annotation(18.5, 48.5, 5.0)]
    return build_target_stack(annotations, grid, (64, 64))


@pytest.fixture(scope="session")
def busy_scene():
    """A noisy scene with several crowns, some of them overlapping."""
    spec = SceneSpec(extent=(160, 160), density=40.0, crown_radius_range=(5.0, 8.0), overlap_probability=0.5,
                     noise_sigma=0.05, blur_sigma=1.0, seed=3)
    return generate_scene(spec)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
