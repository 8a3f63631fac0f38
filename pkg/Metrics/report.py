import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from Metrics.instance import centroid_rmse, label_centroids, prf_from_counts, squared_centroid_error, tree_iou
from Metrics.matching import match_instances
from Metrics.pixel import pixel_iou
from Metrics.shape_stats import compactness_histogram, segment_size_histogram
from config.constants import DEFAULT_IOU_THRESHOLD
from config.exceptions import ParameterError
from config.logger import get_logger
from config.utils import dataclass_from_dict, load_json_config

logger = get_logger(__name__)

DEFAULT_HISTOGRAM_BINS = 10


@dataclass(frozen=True)
class EvalConfig:
    """
    Evaluation parameters.

    Attributes:
      iou_threshold (float): Minimum IoU of a true-positive match, in (0, 1).
      histogram_bins (int): Bins of the segment-size and compactness histograms.
    """
    iou_threshold: float = DEFAULT_IOU_THRESHOLD
    histogram_bins: int = DEFAULT_HISTOGRAM_BINS

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not 0 < self.iou_threshold < 1:
            raise ParameterError(f"iou_threshold must lie in (0, 1), got {self.iou_threshold}")
        if int(self.histogram_bins) != self.histogram_bins or self.histogram_bins < 1:
            raise ParameterError(f"histogram_bins must be a positive integer, got {self.histogram_bins}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, values):
        return dataclass_from_dict(cls, values)

    @classmethod
    def from_json(cls, path, overrides=None):
        return load_json_config(path, cls, overrides)


@dataclass
class ImageEvaluation:
    """
    Metrics of one predicted/ground-truth pair plus the sums pooled aggregation needs.

    tree_iou is None without ground truth and centroid_rmse_px is None without matches.
    """
    name: str
    pixel_iou: float
    tree_iou: float
    centroid_rmse_px: float
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    gt_count: int
    matched_iou_sum: float
    squared_centroid_error: float

    def to_dict(self):
        return asdict(self)


@dataclass
class EvalReport:
    """
    Evaluation of a set of images.

    Pooled precision, recall and F1 come from TP/FP/FN summed over images; the macro block averages
    the per-image values. pixel_iou is the mean per-image pixel IoU; tree_iou and centroid_rmse_px
    pool the matched pairs of every image.
    """
    pixel_iou: float
    tree_iou: float
    centroid_rmse_px: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    macro: dict = field(default_factory=dict)
    per_image: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    shape_stats: dict = None

    def to_dict(self):
        payload = {
            "pixel_iou": self.pixel_iou,
            "tree_iou": self.tree_iou,
            "centroid_rmse_px": self.centroid_rmse_px,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "macro": self.macro,
            "per_image": [image.to_dict() for image in self.per_image],
            "config": self.config,
        }
        if self.shape_stats is not None:
            payload["shape_stats"] = self.shape_stats
        return payload


def evaluate_image(pred, gt, iou_threshold=DEFAULT_IOU_THRESHOLD, name="image"):
    """
    Evaluates one predicted InstanceMap against its ground truth.

    Parameters:
      pred (InstanceMap): Predicted instances.
      gt (InstanceMap): Ground-truth instances on the same grid.
      iou_threshold (float): Matching threshold.
      name (str): Identifier carried into the report.

    Returns:
      ImageEvaluation: The image's metrics.
    """
    match = match_instances(pred, gt, iou_threshold)
    pred_centroids = label_centroids(pred.labels)
    gt_centroids = label_centroids(gt.labels)
    precision, recall, f1 = prf_from_counts(match.tp, match.fp, match.fn)
    gt_count = gt.count
    return ImageEvaluation(
        name=name,
        pixel_iou=pixel_iou(pred.mask(), gt.mask()),
        tree_iou=tree_iou(match, gt_count),
        centroid_rmse_px=centroid_rmse(match, pred_centroids, gt_centroids),
        tp=match.tp,
        fp=match.fp,
        fn=match.fn,
        precision=precision,
        recall=recall,
        f1=f1,
        gt_count=gt_count,
        matched_iou_sum=match.total_iou,
        squared_centroid_error=squared_centroid_error(match, pred_centroids, gt_centroids),
    )


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def evaluate_images(pairs, iou_threshold=DEFAULT_IOU_THRESHOLD, config=None, threads=1):
    """
    Evaluates many images and aggregates them into an EvalReport.

    Parameters:
      pairs (list): (name, pred InstanceMap, gt InstanceMap) triples.
      iou_threshold (float): Matching threshold.
      config (dict, optional): Configuration echo stored in the report.
      threads (int): Worker cap; images are reduced in input order.

    Returns:
      EvalReport: Pooled and macro metrics with the per-image breakdown.
    """
    with ThreadPoolExecutor(max_workers=threads) as executor:
        images = list(executor.map(lambda item: evaluate_image(item[1], item[2], iou_threshold, item[0]), pairs))

    tp = sum(image.tp for image in images)
    fp = sum(image.fp for image in images)
    fn = sum(image.fn for image in images)
    gt_total = sum(image.gt_count for image in images)
    precision, recall, f1 = prf_from_counts(tp, fp, fn)
    report = EvalReport(
        pixel_iou=_mean(image.pixel_iou for image in images),
        tree_iou=sum(image.matched_iou_sum for image in images) / gt_total if gt_total else None,
        centroid_rmse_px=math.sqrt(sum(image.squared_centroid_error for image in images) / tp) if tp else None,
        precision=precision,
        recall=recall,
        f1=f1,
        tp=tp,
        fp=fp,
        fn=fn,
        macro={
            "precision": _mean(image.precision for image in images),
            "recall": _mean(image.recall for image in images),
            "f1": _mean(image.f1 for image in images),
            "tree_iou": _mean(image.tree_iou for image in images),
            "centroid_rmse_px": _mean(image.centroid_rmse_px for image in images),
        },
        per_image=images,
        config=dict(config or {}, iou_threshold=iou_threshold),
    )
    logger.debug("evaluated %d image(s): tp=%d fp=%d fn=%d", len(images), tp, fp, fn)
    return report


def shape_statistics(instance_set, bins=DEFAULT_HISTOGRAM_BINS):
    """Segment-size and compactness histograms of an InstanceSet as JSON-ready lists."""
    size_counts, size_edges = segment_size_histogram(instance_set, bins=bins)
    comp_counts, comp_edges = compactness_histogram(instance_set, bins=bins)
    return {
        "segment_size": {"counts": size_counts.tolist(), "edges": size_edges.tolist()},
        "compactness": {"counts": comp_counts.tolist(), "edges": comp_edges.tolist()},
    }
