import numpy as np

from config.exceptions import DimensionError


def pixel_iou(pred, gt):
    """
    Pixel-level IoU of two binary masks: sum(P*G) / sum(P + G - P*G).

    Two empty masks agree vacuously and score 1.0.

    Parameters:
      pred (array-like): Predicted mask (anything > 0 is foreground).
      gt (array-like): Ground-truth mask.

    Returns:
      float: IoU in [0, 1].
    """
    pred = np.asarray(pred) > 0
    gt = np.asarray(gt) > 0
    if pred.shape != gt.shape:
        raise DimensionError(f"Mask shapes differ: {pred.shape} vs {gt.shape}")
    union = int(np.count_nonzero(pred | gt))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(pred & gt)) / union
