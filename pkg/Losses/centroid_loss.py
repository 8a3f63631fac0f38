import numpy as np

from Losses.loss_weights import LossValue, as_float_array, check_same_shape


def centroid_loss(pred_heatmap, target_heatmap):
    """
    Mean squared error between predicted and target heatmaps; gradient 2(P - Y)/N.
    """
    pred = as_float_array(pred_heatmap, "pred_heatmap")
    target = as_float_array(target_heatmap, "target_heatmap")
    check_same_shape(pred, target, "centroid_loss")
    residual = pred - target
    value = float(np.sum(residual * residual) / residual.size)
    return LossValue(total=value, components={"centroid": value}, gradient=2.0 * residual / residual.size)
