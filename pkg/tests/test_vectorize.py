import math

import numpy as np
import pytest

from Postprocess.vectorize import pixel_outline, vectorize
from RasterCore.raster import GeoTransform, InstanceMap
from config.exceptions import ParameterError


def _square_map(geo=None):
    labels = np.zeros((8, 8), dtype=int)
    labels[2:6, 2:6] = 1
    return InstanceMap(labels, geo=geo)


def _disk_map(radius=10):
    rows, cols = np.indices((32, 32))
    return InstanceMap(((rows - 15) ** 2 + (cols - 16) ** 2 <= radius * radius).astype(int))


def test_empty_map_has_no_instances():
    assert len(vectorize(InstanceMap.empty((6, 6)))) == 0


def test_square_outline_has_the_pixel_area():
    [square] = vectorize(_square_map())
    assert square.polygon.area == 16.0
    assert square.area_px == 16.0
    assert square.centroid_px == (3.5, 3.5)
    assert square.centroid_map == (4.0, -4.0)
    assert square.compactness == pytest.approx(math.pi / 4)
    assert square.polygon.bounds == (2.0, -6.0, 6.0, -2.0)


def test_map_units_follow_the_geotransform():
    [square] = vectorize(_square_map(GeoTransform(100.0, 50.0, 0.5, 0.5)))
    assert square.polygon.area == pytest.approx(4.0)
    assert square.area_map == pytest.approx(4.0)
    assert square.centroid_map == pytest.approx((102.0, 48.0))


def test_contour_fills_holes():
    labels = np.ones((5, 5), dtype=int)
    labels[2, 2] = 0
    [ring] = vectorize(InstanceMap(labels))
    assert ring.polygon.geom_type == "Polygon"
    assert ring.polygon.area == 25.0
    assert len(ring.polygon.interiors) == 0
    assert ring.area_px == 24


def test_diagonal_pixels_share_one_outer_ring():
    outline = pixel_outline(np.array([[True, False], [False, True]]))
    assert outline.geom_type == "Polygon"
    assert len(outline.interiors) == 0
    assert outline.exterior.is_closed
    assert outline.area == pytest.approx(2.0, abs=1e-4)


def test_separate_pieces_keep_the_largest_ring():
    member = np.array([[True, True, False, False], [False, False, False, True]])
    outline = pixel_outline(member, row0=3, col0=5)
    assert outline.geom_type == "Polygon"
    assert outline.bounds == (5.0, 3.0, 7.0, 4.0)


def test_ellipse_of_a_disk_is_round():
    instance_map = _disk_map()
    [contour] = vectorize(instance_map)
    [ellipse] = vectorize(instance_map, mode="ellipse")
    assert ellipse.area_px == contour.area_px
    assert ellipse.centroid_px == pytest.approx((15.0, 16.0))
    assert ellipse.polygon.area == pytest.approx(contour.area_px, rel=0.05)
    assert ellipse.compactness > 0.95
    assert ellipse.polygon.centroid.x == pytest.approx(16.5, abs=1e-6)
    assert ellipse.polygon.centroid.y == pytest.approx(-15.5, abs=1e-6)


def test_ellipse_follows_elongation():
    labels = np.zeros((20, 40), dtype=int)
    labels[8:12, 5:35] = 1
    [ellipse] = vectorize(InstanceMap(labels), mode="ellipse")
    min_x, min_y, max_x, max_y = ellipse.polygon.bounds
    assert max_x - min_x > 4 * (max_y - min_y)


def test_single_pixel_ellipse_keeps_an_area():
    labels = np.zeros((3, 3), dtype=int)
    labels[1, 1] = 1
    [dot] = vectorize(InstanceMap(labels), mode="ellipse")
    assert dot.polygon.area > 0.5


def test_instances_come_in_label_order():
    labels = np.zeros((6, 10), dtype=int)
    labels[1:3, 6:9] = 1
    labels[3:5, 1:3] = 2
    instances = vectorize(InstanceMap(labels))
    assert [i.id for i in instances] == [1, 2]
    assert [i.area_px for i in instances] == [6.0, 4.0]


def test_unknown_mode_is_rejected():
    with pytest.raises(ParameterError):
        vectorize(_square_map(), mode="hull")
