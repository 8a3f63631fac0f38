import math

import numpy as np


def tree_iou(match, gt_count):
    """
    Instance-level IoU: sum of matched-pair IoUs over the number of ground-truth instances.

    Unmatched ground truth contributes 0.

    Parameters:
      match (MatchResult): Matching of the image.
      gt_count (int): Number of ground-truth instances.

    Returns:
      float | None: None when there is no ground truth (the metric is undefined).
    """
    if gt_count == 0:
        return None
    return match.total_iou / gt_count


def centroid_rmse(match, pred_centroids, gt_centroids):
    """
    Root mean squared centroid distance over matched pairs, in pixels.

    Parameters:
      match (MatchResult): Matching of the image.
      pred_centroids (dict): Predicted id -> (row, col).
      gt_centroids (dict): Ground-truth id -> (row, col).

    Returns:
      float | None: None when nothing matched.
    """
    if not match.pairs:
        return None
    return math.sqrt(squared_centroid_error(match, pred_centroids, gt_centroids) / len(match.pairs))


def squared_centroid_error(match, pred_centroids, gt_centroids):
    total = 0.0
    for pred_id, gt_id, _ in match.pairs:
        dr = pred_centroids[pred_id][0] - gt_centroids[gt_id][0]
        dc = pred_centroids[pred_id][1] - gt_centroids[gt_id][1]
        total += dr * dr + dc * dc
    return total


def prf_from_counts(tp, fp, fn):
    """
    Precision, recall and F1 from counts.

    An empty prediction set has precision 1, an empty ground truth has recall 1 and F1 is 0 when
    precision + recall is 0.
    """
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    if tp:
        # Same value as 2PR/(P+R), without the rounding of the intermediate ratios.
        f1 = 2 * tp / (2 * tp + fp + fn)
    else:
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def instance_prf(match):
    return prf_from_counts(match.tp, match.fp, match.fn)


def label_centroids(labels):
    """
    Mean (row, col) of every instance in a compact label array.

    Returns:
      dict: id -> (row, col).
    """
    labels = np.asarray(labels)
    count = int(labels.max()) if labels.size else 0
    if count == 0:
        return {}
    rows, cols = np.indices(labels.shape)
    flat = labels.ravel()
    areas = np.bincount(flat, minlength=count + 1)
    row_sums = np.bincount(flat, weights=rows.ravel(), minlength=count + 1)
    col_sums = np.bincount(flat, weights=cols.ravel(), minlength=count + 1)
    return {i: (row_sums[i] / areas[i], col_sums[i] / areas[i]) for i in range(1, count + 1) if areas[i]}
