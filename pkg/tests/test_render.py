import numpy as np
import pytest
from PIL import Image

from Cli.render import BACKGROUND, base_image, label_palette, render, render_labels
from RasterCore.raster import InstanceMap, MultiChannelRaster
from config.exceptions import DimensionError, ValidationError


def _labels():
    labels = np.zeros((12, 16), dtype=int)
    labels[1:5, 1:5] = 1
    labels[6:11, 8:15] = 2
    return InstanceMap(labels)


def test_palette_is_distinct_and_never_background():
    palette = label_palette(range(1, 300))
    colors = list(palette.values())
    assert len(set(colors)) == len(colors) == 299
    assert BACKGROUND not in colors
    assert label_palette([5, 2]) == label_palette([2, 5])


def test_labels_are_painted_on_a_black_canvas():
    instance_map = _labels()
    rgb = render_labels(instance_map)
    palette = label_palette([1, 2])
    assert rgb.shape == (12, 16, 3)
    assert rgb.dtype == np.uint8
    assert tuple(rgb[2, 2]) == palette[1]
    assert tuple(rgb[8, 10]) == palette[2]
    assert tuple(rgb[0, 0]) == BACKGROUND


def test_overlay_blends_with_the_base():
    base = MultiChannelRaster(np.tile(np.linspace(0.0, 1.0, 16), (12, 1)))
    plain = base_image(base)
    rgb = render_labels(_labels(), base)
    assert np.array_equal(rgb[0], plain[0])
    assert not np.array_equal(rgb[2, 2], plain[2, 2])


def test_false_color_needs_four_bands():
    with pytest.raises(ValidationError):
        base_image(MultiChannelRaster(np.zeros((4, 4, 3))), false_color=True)
    bands = np.zeros((4, 4, 4))
    bands[:, :, 3] = np.arange(16).reshape(4, 4)
    rgb = base_image(MultiChannelRaster(bands), false_color=True)
    assert rgb[:, :, 0].max() == 255
    assert not rgb[:, :, 1:].any()


def test_base_must_match_the_labels():
    with pytest.raises(DimensionError):
        render_labels(_labels(), MultiChannelRaster(np.zeros((12, 15))))


def test_render_writes_a_png(tmp_path):
    out = tmp_path / "nested" / "labels.png"
    render(_labels(), out)
    with Image.open(out) as image:
        assert image.size == (16, 12)
        assert image.mode == "RGB"
    render(InstanceMap.empty((5, 5)), tmp_path / "empty.png")
    with Image.open(tmp_path / "empty.png") as image:
        assert not np.asarray(image).any()
