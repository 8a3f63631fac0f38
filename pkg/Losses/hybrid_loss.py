import numpy as np

from Losses.loss_weights import LossValue, LossWeights, as_float_array, check_same_shape
from config.constants import BOUNDARY_VALUE, SMOOTH_L1_DELTA
from config.exceptions import ValidationError


def smooth_l1(residual, delta=SMOOTH_L1_DELTA):
    """Elementwise Smooth-L1 and its derivative: 0.5 r^2 / delta inside |r| < delta, |r| - 0.5 delta outside."""
    magnitude = np.abs(residual)
    quadratic = magnitude < delta
    value = np.where(quadratic, 0.5 * residual * residual / delta, magnitude - 0.5 * delta)
    derivative = np.where(quadratic, residual / delta, np.sign(residual))
    return value, derivative


def hybrid_loss(pred_hybrid, target_hybrid, w=None):
    """
    Hybrid SDT-boundary loss.

    L = lambda_SDT * mean over non-boundary pixels of SmoothL1(pred - target)
        + lambda_boundary * mean over boundary pixels of |pred + 1|.
    Boundary pixels are exactly those whose target equals -1. An empty pixel set contributes 0.

    Parameters:
      pred_hybrid (array-like): Predicted hybrid map.
      target_hybrid (array-like): Target hybrid map in [-1, 1].
      w (LossWeights, optional): Weights; defaults apply when omitted.

    Returns:
      LossValue: total, components {sdt, boundary, hybrid} (sdt and boundary unweighted) and gradient.

    Raises:
      ValidationError: If the target leaves [-1, 1].
    """
    w = w or LossWeights()
    pred = as_float_array(pred_hybrid, "pred_hybrid")
    target = as_float_array(target_hybrid, "target_hybrid")
    check_same_shape(pred, target, "hybrid_loss")
    if target.size and (target.min() < -1 or target.max() > 1):
        raise ValidationError("hybrid_loss: target values must lie in [-1, 1]")

    boundary = target == BOUNDARY_VALUE
    interior = ~boundary
    gradient = np.zeros_like(pred)

    sdt = 0.0
    n_interior = int(np.count_nonzero(interior))
    if n_interior:
        value, derivative = smooth_l1(pred[interior] - target[interior])
        sdt = float(np.sum(value) / n_interior)
        gradient[interior] = w.lambda_sdt * derivative / n_interior

    boundary_term = 0.0
    n_boundary = int(np.count_nonzero(boundary))
    if n_boundary:
        residual = pred[boundary] - BOUNDARY_VALUE
        boundary_term = float(np.sum(np.abs(residual)) / n_boundary)
        gradient[boundary] = w.lambda_boundary * np.sign(residual) / n_boundary

    total = w.lambda_sdt * sdt + w.lambda_boundary * boundary_term
    return LossValue(total=float(total),
                     components={"sdt": sdt, "boundary": boundary_term, "hybrid": float(total)},
                     gradient=gradient)
