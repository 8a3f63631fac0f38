import numpy as np

from Losses.centroid_loss import centroid_loss
from Losses.hybrid_loss import hybrid_loss
from Losses.loss_weights import LossValue, LossWeights
from Losses.seg_loss import seg_loss
from config.constants import CENTROID_CHANNEL, HYBRID_CHANNEL, SEGMENTATION_CHANNEL
from config.exceptions import DimensionError

COMPONENT_NAMES = ("bce", "focal", "dice", "centroid", "sdt", "boundary", "seg", "hybrid")


def _stack_array(stack, what):
    if hasattr(stack, "as_array"):
        array = stack.as_array()
    else:
        array = np.asarray(getattr(stack, "data", stack), dtype=np.float64)
    if array.ndim != 3 or array.shape[2] != 3:
        raise DimensionError(f"{what} must have 3 channels (segmentation, centroid, hybrid), "
                             f"got shape {array.shape}")
    return np.asarray(array, dtype=np.float64)


def total_loss(pred_stack, target_stack, w=None):
    """
    Multi-task loss L_total = L_seg + lambda_centroid * L_centroid + lambda_hybrid * L_hybrid.

    Parameters:
      pred_stack (MultiChannelRaster | np.ndarray): (H, W, 3) with segmentation logits, centroid
                                                   heatmap and hybrid map in that order.
      target_stack (TargetStack | MultiChannelRaster | np.ndarray): Targets in the same order.
      w (LossWeights, optional): Weights; defaults apply when omitted.

    Returns:
      LossValue: total, every component by name and the (H, W, 3) gradient.

    Raises:
      DimensionError: If either stack does not have exactly 3 channels or the shapes differ.
    """
    w = w or LossWeights()
    pred = _stack_array(pred_stack, "Prediction stack")
    target = _stack_array(target_stack, "Target stack")
    if pred.shape != target.shape:
        raise DimensionError(f"Prediction shape {pred.shape} != target shape {target.shape}")

    seg = seg_loss(pred[:, :, SEGMENTATION_CHANNEL], target[:, :, SEGMENTATION_CHANNEL], w)
    centroid = centroid_loss(pred[:, :, CENTROID_CHANNEL], target[:, :, CENTROID_CHANNEL])
    hybrid = hybrid_loss(pred[:, :, HYBRID_CHANNEL], target[:, :, HYBRID_CHANNEL], w)

    total = seg.total + w.lambda_centroid * centroid.total + w.lambda_hybrid * hybrid.total
    gradient = np.zeros_like(pred)
    gradient[:, :, SEGMENTATION_CHANNEL] = seg.gradient
    gradient[:, :, CENTROID_CHANNEL] = w.lambda_centroid * centroid.gradient
    gradient[:, :, HYBRID_CHANNEL] = w.lambda_hybrid * hybrid.gradient

    components = {**seg.components, **centroid.components, **hybrid.components}
    return LossValue(total=float(total), components={name: components[name] for name in COMPONENT_NAMES},
                     gradient=gradient)
