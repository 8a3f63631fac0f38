import numpy as np
from scipy.special import expit

from Losses.loss_weights import LossValue, LossWeights, as_float_array, check_same_shape
from config.constants import DICE_SMOOTHING
from config.exceptions import ValidationError


def _softplus(x):
    return np.logaddexp(0.0, x)


def weighted_bce(logits, target, pos_weight):
    """
    Per-pixel BCE from logits in log-sum form, with its derivative.

    l = w*y*softplus(-x) + (1-y)*softplus(x); never evaluates log(sigmoid(x)) directly.
    """
    loss = pos_weight * target * _softplus(-logits) + (1.0 - target) * _softplus(logits)
    prob = expit(logits)
    grad = pos_weight * target * (prob - 1.0) + (1.0 - target) * prob
    return loss, grad


def focal_bce(logits, target, weights):
    """
    Per-pixel focal-modulated BCE alpha_t*(1-p_t)^gamma*BCE, with its derivative.

    alpha_t is focal_alpha on positives and 1 - focal_alpha on negatives.
    """
    gamma = weights.focal_gamma
    bce, bce_grad = weighted_bce(logits, target, weights.bce_pos_weight)
    prob = expit(logits)
    # 1 - p_t without cancellation: sigmoid(x) for negatives, sigmoid(-x) for positives.
    miss = expit(logits * (1.0 - 2.0 * target))
    alpha_t = weights.focal_alpha * target + (1.0 - weights.focal_alpha) * (1.0 - target)
    modulator = miss ** gamma
    dp_t = (2.0 * target - 1.0) * prob * (1.0 - prob)
    with np.errstate(divide="ignore", invalid="ignore"):
        dmod = np.where(miss > 0, -gamma * miss ** (gamma - 1.0) * dp_t, 0.0)
    loss = alpha_t * modulator * bce
    grad = alpha_t * (dmod * bce + modulator * bce_grad)
    return loss, grad


def dice_term(logits, target):
    """
    Soft Dice on sigmoid probabilities with smoothing eps in numerator and denominator.

    Returns:
      tuple: (1 - Dice, d(1 - Dice)/d logits).
    """
    prob = expit(logits)
    intersection = np.sum(prob * target)
    denominator = np.sum(prob) + np.sum(target) + DICE_SMOOTHING
    numerator = 2.0 * intersection + DICE_SMOOTHING
    dice = numerator / denominator
    ddice_dprob = (2.0 * target * denominator - numerator) / (denominator * denominator)
    grad = -ddice_dprob * prob * (1.0 - prob)
    return 1.0 - dice, grad


def seg_loss(pred_logits, target_mask, w=None):
    """
    Segmentation loss L_seg = BCE + lambda_Dice * (1 - Dice).

    The BCE term is averaged over pixels with the positive-class weight; with focal_gamma > 0 it
    is replaced by the focal-modulated BCE.

    Parameters:
      pred_logits (array-like): Segmentation logits.
      target_mask (array-like): Binary target in {0, 1}.
      w (LossWeights, optional): Weights; defaults apply when omitted.

    Returns:
      LossValue: total, components {bce, focal, dice, seg} and the gradient w.r.t. the logits.
    """
    w = w or LossWeights()
    logits = as_float_array(pred_logits, "pred_logits")
    target = as_float_array(target_mask, "target_mask")
    check_same_shape(logits, target, "seg_loss")
    if not np.all((target == 0) | (target == 1)):
        raise ValidationError("seg_loss: target mask must be binary")
    n = logits.size

    if w.focal_gamma > 0:
        pixel_loss, pixel_grad = focal_bce(logits, target, w)
    else:
        pixel_loss, pixel_grad = weighted_bce(logits, target, w.bce_pos_weight)
    classification = float(np.sum(pixel_loss) / n)
    dice, dice_grad = dice_term(logits, target)

    total = classification + w.lambda_dice * dice
    gradient = pixel_grad / n + w.lambda_dice * dice_grad
    components = {
        "bce": classification if w.focal_gamma == 0 else 0.0,
        "focal": classification if w.focal_gamma > 0 else 0.0,
        "dice": float(dice),
        "seg": float(total),
    }
    return LossValue(total=float(total), components=components, gradient=gradient)
