import numpy as np

from Losses.centroid_loss import centroid_loss
from Losses.hybrid_loss import hybrid_loss
from Losses.seg_loss import seg_loss
from Losses.total_loss import total_loss
from config.constants import CENTROID_CHANNEL, HYBRID_CHANNEL, SEGMENTATION_CHANNEL

DEFAULT_STEP = 1e-4
# Gradient elements smaller than this are compared absolutely.
GRADIENT_FLOOR = 1e-6


def numeric_gradient(fn, x, h=DEFAULT_STEP):
    """
    Central finite-difference gradient of a scalar function.

    Parameters:
      fn (callable): Maps an array shaped like x to a float or to a LossValue.
      x (np.ndarray): Point of evaluation; not modified.
      h (float): Step size.

    Returns:
      np.ndarray: float64 array shaped like x.
    """
    point = np.array(x, dtype=np.float64, copy=True)
    gradient = np.zeros_like(point)
    flat = point.reshape(-1)
    out = gradient.reshape(-1)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + h
        upper = _scalar(fn(point))
        flat[i] = saved - h
        lower = _scalar(fn(point))
        flat[i] = saved
        out[i] = (upper - lower) / (2.0 * h)
    return gradient


def _scalar(value):
    return float(getattr(value, "total", value))


def relative_gradient_error(analytic, numeric, floor=GRADIENT_FLOOR):
    """
    Largest element-wise relative error |a - n| / max(|a|, |n|, floor).

    Parameters:
      analytic, numeric (np.ndarray): Gradients of the same shape.
      floor (float): Magnitude below which an element's error counts absolutely.

    Returns:
      float: 0 for empty or identical gradients.
    """
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.size == 0:
        return 0.0
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))


def loss_gradient_errors(pred_stack, target_stack, w=None, h=DEFAULT_STEP):
    """
    Compares every loss's analytic gradient with central differences at one prediction.

    Parameters:
      pred_stack (MultiChannelRaster | np.ndarray): (H, W, 3) prediction.
      target_stack (MultiChannelRaster | np.ndarray): (H, W, 3) targets.
      w (LossWeights, optional): Loss weights.
      h (float): Finite-difference step.

    Returns:
      dict: Loss name (seg, centroid, hybrid, total) -> largest element-wise relative gradient error.
    """
    pred = np.asarray(getattr(pred_stack, "data", pred_stack), dtype=np.float64)
    target = np.asarray(getattr(target_stack, "data", target_stack), dtype=np.float64)
    checks = {
        "seg": (lambda x: seg_loss(x, target[:, :, SEGMENTATION_CHANNEL], w), pred[:, :, SEGMENTATION_CHANNEL]),
        "centroid": (lambda x: centroid_loss(x, target[:, :, CENTROID_CHANNEL]), pred[:, :, CENTROID_CHANNEL]),
        "hybrid": (lambda x: hybrid_loss(x, target[:, :, HYBRID_CHANNEL], w), pred[:, :, HYBRID_CHANNEL]),
        "total": (lambda x: total_loss(x, target, w), pred),
    }
    return {name: relative_gradient_error(fn(x).gradient, numeric_gradient(fn, x, h))
            for name, (fn, x) in checks.items()}
