from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from config.constants import DEFAULT_IOU_THRESHOLD
from config.exceptions import DimensionError, ParameterError

# Totals closer than this to the optimum count as ties.
TIE_TOLERANCE = 1e-9


@dataclass
class MatchResult:
    """
    One-to-one correspondence between predicted and ground-truth instances.

    Attributes:
      pairs (list): (pred_id, gt_id, iou) with iou >= iou_threshold, sorted by pred_id.
      unmatched_pred (list): Predicted ids without a partner (false positives).
      unmatched_gt (list): Ground-truth ids without a partner (false negatives).
      iou_threshold (float): Matching threshold in (0, 1).
    """
    pairs: list = field(default_factory=list)
    unmatched_pred: list = field(default_factory=list)
    unmatched_gt: list = field(default_factory=list)
    iou_threshold: float = DEFAULT_IOU_THRESHOLD

    @property
    def tp(self):
        return len(self.pairs)

    @property
    def fp(self):
        return len(self.unmatched_pred)

    @property
    def fn(self):
        return len(self.unmatched_gt)

    @property
    def total_iou(self):
        return float(sum(iou for _, _, iou in self.pairs))


def iou_matrix(pred_labels, gt_labels):
    """
    IoU of every (predicted, ground-truth) instance pair from the label contingency table.

    Parameters:
      pred_labels (np.ndarray): Compact predicted labels {0..P}.
      gt_labels (np.ndarray): Compact ground-truth labels {0..G}.

    Returns:
      np.ndarray: (P, G) float64 matrix; row i is predicted id i + 1, column j is ground-truth id j + 1.
    """
    pred_labels = np.asarray(pred_labels, dtype=np.int64)
    gt_labels = np.asarray(gt_labels, dtype=np.int64)
    if pred_labels.shape != gt_labels.shape:
        raise DimensionError(f"Label shapes differ: {pred_labels.shape} vs {gt_labels.shape}")
    n_pred = int(pred_labels.max()) if pred_labels.size else 0
    n_gt = int(gt_labels.max()) if gt_labels.size else 0
    contingency = np.bincount(
        (pred_labels * (n_gt + 1) + gt_labels).ravel(), minlength=(n_pred + 1) * (n_gt + 1)
    ).reshape(n_pred + 1, n_gt + 1)
    pred_area = contingency.sum(axis=1)[1:, np.newaxis]
    gt_area = contingency.sum(axis=0)[np.newaxis, 1:]
    intersection = contingency[1:, 1:]
    union = pred_area + gt_area - intersection
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(union > 0, intersection / np.maximum(union, 1), 0.0)


def _optimum(weights):
    if weights.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(weights, maximize=True)
    return float(weights[rows, cols].sum())


def lexicographic_assignment(weights, tolerance=TIE_TOLERANCE):
    """
    Maximum-weight one-to-one assignment whose sorted (row, col) pair list is smallest among all optima.

    Rows are decided in ascending order: each takes the lowest column that still allows the
    optimum, or stays unassigned when none does. Zero weights never pair.

    Parameters:
      weights (np.ndarray): (n, m) non-negative weights.
      tolerance (float): Totals within this distance of the optimum count as optimal.

    Returns:
      list of tuple: (row, col) pairs in ascending row order.
    """
    n_rows = weights.shape[0]
    best = _optimum(weights)
    free = list(range(weights.shape[1]))
    pairs, fixed = [], 0.0
    for row in range(n_rows):
        for col in free:
            if weights[row, col] <= 0:
                continue
            rest = [c for c in free if c != col]
            value = fixed + weights[row, col] + _optimum(weights[np.ix_(np.arange(row + 1, n_rows), rest)])
            if value >= best - tolerance:
                pairs.append((row, col))
                fixed += weights[row, col]
                free = rest
                break
    return pairs


def match_instances(pred, gt, iou_threshold=DEFAULT_IOU_THRESHOLD):
    """
    Matches predicted to ground-truth instances by optimal assignment on IoU.

    Only pairs with IoU >= iou_threshold are candidates; the assignment maximises the total IoU of
    the matched candidates. Among equally good assignments the one with the lowest
    (pred_id, gt_id) pairs wins. Each connected group of candidate pairs is solved on its own.

    Parameters:
      pred (InstanceMap): Predicted instances.
      gt (InstanceMap): Ground-truth instances on the same grid.
      iou_threshold (float): Minimum IoU for a match, in (0, 1).

    Returns:
      MatchResult: Matched pairs and the unmatched ids on each side.
    """
    if not 0 < iou_threshold < 1:
        raise ParameterError(f"iou_threshold must lie in (0, 1), got {iou_threshold}")
    ious = iou_matrix(pred.labels, gt.labels)
    n_pred, n_gt = ious.shape
    pairs = []
    if n_pred and n_gt:
        weights = np.where(ious >= iou_threshold, ious, 0.0)
        rows, cols = np.nonzero(weights)
        graph = coo_matrix((np.ones(len(rows)), (rows, n_pred + cols)), shape=(n_pred + n_gt, n_pred + n_gt))
        _, component = connected_components(graph, directed=False)
        for group in np.unique(component[rows]):
            group_rows = np.flatnonzero(component[:n_pred] == group)
            group_cols = np.flatnonzero(component[n_pred:] == group)
            for i, j in lexicographic_assignment(weights[np.ix_(group_rows, group_cols)]):
                row, col = group_rows[i], group_cols[j]
                pairs.append((int(row) + 1, int(col) + 1, float(ious[row, col])))
    pairs.sort()
    matched_pred = {p for p, _, _ in pairs}
    matched_gt = {g for _, g, _ in pairs}
    return MatchResult(
        pairs=pairs,
        unmatched_pred=[i for i in range(1, n_pred + 1) if i not in matched_pred],
        unmatched_gt=[j for j in range(1, n_gt + 1) if j not in matched_gt],
        iou_threshold=iou_threshold,
    )
