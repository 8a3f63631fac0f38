import math

import numpy as np
import pytest
from shapely.geometry import Point, box

import oracles
from Metrics.instance import centroid_rmse, label_centroids, prf_from_counts, tree_iou
from Metrics.matching import iou_matrix, match_instances
from Metrics.pixel import pixel_iou
from Metrics.report import EvalConfig, evaluate_image, evaluate_images, shape_statistics
from Metrics.shape_stats import centroid_density, compactness, segment_size_histogram
from Postprocess.vectorize import vectorize
from RasterCore.raster import GeoTransform, InstanceMap, InstanceSet, compact_labels
from config.exceptions import DimensionError, ParameterError, ValidationError


def _rectangles(rng, shape, count, jitter=0):
    labels = np.zeros(shape, dtype=int)
    for label in range(1, count + 1):
        row = int(rng.integers(0, shape[0] - 4))
        col = int(rng.integers(0, shape[1] - 4))
        height, width = (int(v) for v in rng.integers(3, 8, size=2))
        if jitter:
            row += int(rng.integers(-jitter, jitter + 1))
            col += int(rng.integers(-jitter, jitter + 1))
        labels[max(row, 0):row + height, max(col, 0):col + width] = label
    return compact_labels(labels)


def _two_trees():
    labels = np.zeros((10, 10), dtype=int)
    labels[1:4, 1:4] = 1
    labels[6:9, 5:9] = 2
    return InstanceMap(labels)


def test_pixel_iou():
    assert pixel_iou([[1, 1, 0]], [[0, 1, 1]]) == pytest.approx(1 / 3)
    assert pixel_iou(np.zeros((3, 3)), np.zeros((3, 3))) == 1.0
    assert pixel_iou(np.ones((3, 3)), np.zeros((3, 3))) == 0.0
    with pytest.raises(DimensionError):
        pixel_iou(np.zeros((3, 3)), np.zeros((3, 4)))


def test_iou_matrix_rows_are_predictions():
    pred = np.array([[1, 1, 2, 0]])
    gt = np.array([[1, 0, 1, 1]])
    np.testing.assert_allclose(iou_matrix(pred, gt), [[1 / 4], [1 / 3]])


def test_perfect_prediction_matches_everything():
    gt = _two_trees()
    match = match_instances(gt, gt)
    assert match.pairs == [(1, 1, 1.0), (2, 2, 1.0)]
    assert (match.tp, match.fp, match.fn) == (2, 0, 0)
    assert tree_iou(match, gt.count) == 1.0


def test_pairs_below_the_threshold_do_not_match():
    gt = np.zeros((4, 8), dtype=int)
    gt[:, :4] = 1
    pred = np.zeros((4, 8), dtype=int)
    pred[:, 2:6] = 1
    match = match_instances(InstanceMap(pred), InstanceMap(gt), iou_threshold=0.5)
    assert match.tp == 0
    assert match.unmatched_pred == [1]
    assert match.unmatched_gt == [1]
    assert match_instances(InstanceMap(pred), InstanceMap(gt), iou_threshold=0.3).tp == 1


def test_matching_prefers_the_larger_total_iou():
    # Taking the best single pair (0.4) first would leave the other two instances unmatched.
    gt = np.zeros((1, 12), dtype=int)
    gt[0, 0:4] = 1
    gt[0, 4:12] = 2
    pred = np.zeros((1, 12), dtype=int)
    pred[0, 2:8] = 1
    pred[0, 10:12] = 2
    match = match_instances(InstanceMap(pred), InstanceMap(gt), iou_threshold=0.1)
    assert match.pairs == [(1, 1, 0.25), (2, 2, 0.25)]


@pytest.mark.parametrize("iou_threshold", [0.3, 0.5])
def test_matching_is_optimal(rng, iou_threshold):
    for _ in range(200):
        gt = _rectangles(rng, (16, 16), int(rng.integers(1, 7)))
        pred = _rectangles(rng, (16, 16), int(rng.integers(1, 7)), jitter=2)
        match = match_instances(InstanceMap(pred), InstanceMap(gt), iou_threshold)
        best_total, best_count, best_pairs = oracles.best_assignment(pred, gt, iou_threshold)
        assert match.total_iou == pytest.approx(best_total)
        assert match.tp == best_count
        assert [(p, g) for p, g, _ in match.pairs] == best_pairs
        assert all(iou >= iou_threshold for _, _, iou in match.pairs)


def _paired_strip(rng, count):
    """Equal-area instances on a 1-pixel strip: ground truth owns adjacent pixel pairs, predictions random pairs."""
    gt = np.repeat(np.arange(1, count + 1), 2)[np.newaxis, :]
    pred = np.zeros_like(gt)
    order = rng.permutation(2 * count)
    for index in range(count):
        pred[0, order[2 * index:2 * index + 2]] = index + 1
    return compact_labels(pred), gt


def test_tied_matchings_prefer_the_lowest_ids(rng):
    for _ in range(200):
        pred, gt = _paired_strip(rng, int(rng.integers(2, 5)))
        match = match_instances(InstanceMap(pred), InstanceMap(gt), iou_threshold=0.3)
        _, _, best_pairs = oracles.best_assignment(pred, gt, 0.3)
        assert [(p, g) for p, g, _ in match.pairs] == best_pairs


def test_tied_matching_example():
    # Both predictions overlap both ground-truth instances by one pixel (IoU 1/3 each).
    gt = np.array([[1, 1, 2, 2]])
    pred = np.array([[1, 2, 1, 2]])
    match = match_instances(InstanceMap(pred), InstanceMap(gt), iou_threshold=0.3)
    assert [(p, g) for p, g, _ in match.pairs] == [(1, 1), (2, 2)]


def test_matching_rejects_a_bad_threshold():
    with pytest.raises(ParameterError):
        match_instances(_two_trees(), _two_trees(), iou_threshold=1.0)


def test_tree_iou_without_ground_truth_is_undefined():
    empty = InstanceMap.empty((10, 10))
    assert tree_iou(match_instances(_two_trees(), empty), 0) is None


def test_centroid_rmse_without_matches_is_undefined():
    gt = np.zeros((20, 20), dtype=int)
    gt[2:5, 2:5] = 1
    pred = np.zeros((20, 20), dtype=int)
    pred[5:8, 6:9] = 1
    match = match_instances(InstanceMap(pred), InstanceMap(gt), iou_threshold=0.01)
    assert match.tp == 0
    assert centroid_rmse(match, label_centroids(pred), label_centroids(gt)) is None


def test_centroid_rmse_of_a_shifted_instance():
    gt = np.zeros((20, 20), dtype=int)
    gt[2:12, 2:12] = 1
    pred = np.zeros((20, 20), dtype=int)
    pred[5:15, 6:16] = 1
    match = match_instances(InstanceMap(pred), InstanceMap(gt), iou_threshold=0.1)
    assert centroid_rmse(match, label_centroids(pred), label_centroids(gt)) == pytest.approx(5.0)


@pytest.mark.parametrize("counts, expected", [
    ((2, 1, 3), (2 / 3, 2 / 5, 1 / 2)),
    ((0, 0, 0), (1.0, 1.0, 1.0)),
    ((0, 3, 0), (0.0, 1.0, 0.0)),
    ((0, 0, 4), (1.0, 0.0, 0.0)),
])
def test_precision_recall_f1(counts, expected):
    assert prf_from_counts(*counts) == pytest.approx(expected)


def test_label_centroids():
    centroids = label_centroids(_two_trees().labels)
    assert centroids[1] == pytest.approx((2.0, 2.0))
    assert centroids[2] == pytest.approx((7.0, 6.5))
    assert label_centroids(np.zeros((3, 3), dtype=int)) == {}


def test_evaluate_image_of_a_perfect_prediction():
    gt = _two_trees()
    image = evaluate_image(gt, gt, name="plot")
    assert image.name == "plot"
    assert (image.pixel_iou, image.tree_iou, image.centroid_rmse_px) == (1.0, 1.0, 0.0)
    assert (image.precision, image.recall, image.f1) == (1.0, 1.0, 1.0)


def test_pooled_and_macro_aggregation_differ():
    perfect = _two_trees()
    missed_gt = np.zeros((10, 10), dtype=int)
    missed_gt[2:6, 2:6] = 1
    pairs = [("a", perfect, perfect), ("b", InstanceMap.empty((10, 10)), InstanceMap(missed_gt))]
    report = evaluate_images(pairs, config={"source": "test"}, threads=2)
    assert (report.tp, report.fp, report.fn) == (2, 0, 1)
    assert report.precision == 1.0
    assert report.recall == pytest.approx(2 / 3)
    assert report.f1 == pytest.approx(0.8)
    assert report.tree_iou == pytest.approx(2 / 3)
    assert report.pixel_iou == pytest.approx(0.5)
    assert report.macro["recall"] == pytest.approx(0.5)
    assert report.macro["tree_iou"] == pytest.approx(0.5)
    assert report.centroid_rmse_px == 0.0
    assert [image.name for image in report.per_image] == ["a", "b"]
    assert report.config == {"source": "test", "iou_threshold": 0.5}
    payload = report.to_dict()
    assert "shape_stats" not in payload
    assert payload["per_image"][1]["tree_iou"] == 0.0


def test_evaluate_images_of_nothing():
    report = evaluate_images([("empty", InstanceMap.empty((4, 4)), InstanceMap.empty((4, 4)))])
    assert report.tree_iou is None
    assert report.centroid_rmse_px is None
    assert (report.precision, report.recall) == (1.0, 1.0)


def test_compactness():
    assert compactness(box(0, 0, 2, 2)) == pytest.approx(math.pi / 4)
    assert compactness(Point(0, 0).buffer(5, quad_segs=64)) == pytest.approx(1.0, abs=1e-3)
    assert compactness(box(0, 0, 10, 1)) < compactness(box(0, 0, 2, 2))
    with pytest.raises(ValidationError):
        compactness(Point(0, 0).buffer(0))


def test_shape_histograms():
    instances = vectorize(_two_trees())
    counts, edges = segment_size_histogram(instances, bins=3)
    assert counts.sum() == 2
    assert edges[0] == 9.0
    assert edges[-1] == 12.0
    stats = shape_statistics(instances, bins=4)
    assert sum(stats["compactness"]["counts"]) == 2
    assert stats["compactness"]["edges"] == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_centroid_density_per_hectare():
    labels = np.zeros((64, 64), dtype=int)
    labels[10:13, 10:13] = 1
    instances = vectorize(InstanceMap(labels, geo=GeoTransform(0.0, 64.0, 1.0, 1.0)),
                          GeoTransform(0.0, 64.0, 1.0, 1.0))
    density = centroid_density(instances, (64, 64))
    assert density.shape == (1, 1)
    assert density[0, 0] == pytest.approx(2.44140625)


def test_centroid_density_normalises_clipped_cells():
    labels = np.zeros((96, 64), dtype=int)
    labels[70:73, 10:13] = 1
    instances = vectorize(InstanceMap(labels))
    density = centroid_density(instances, (96, 64), cell=64)
    assert density.shape == (2, 1)
    assert density[0, 0] == 0.0
    assert density[1, 0] == pytest.approx(1 / (32 * 64 / 10000))
    with pytest.raises(ParameterError):
        centroid_density(InstanceSet(), (4, 4), cell=0)


def test_eval_config():
    assert EvalConfig().to_dict() == {"iou_threshold": 0.5, "histogram_bins": 10}
    assert EvalConfig.from_dict({"iou_threshold": 0.7}).iou_threshold == 0.7
    for values in ({"iou_threshold": 0.0}, {"histogram_bins": 0}, {"histogram_bins": 2.5}):
        with pytest.raises(ParameterError):
            EvalConfig(**values)
    with pytest.raises(ParameterError):
        EvalConfig.from_dict({"threshold": 0.5})
