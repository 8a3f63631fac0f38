import math
from dataclasses import asdict, dataclass, field

import numpy as np

from config.constants import (DEFAULT_LAMBDA_BOUNDARY, DEFAULT_LAMBDA_CENTROID, DEFAULT_LAMBDA_DICE,
                              DEFAULT_LAMBDA_HYBRID, DEFAULT_LAMBDA_SDT)
from config.exceptions import DimensionError, ParameterError
from config.utils import dataclass_from_dict, load_json_config


@dataclass(frozen=True)
class LossWeights:
    """
    Weights of the multi-task loss.

    Attributes:
      lambda_dice (float): Dice weight inside the segmentation loss.
      lambda_centroid (float): Centroid loss weight in the total.
      lambda_hybrid (float): Hybrid loss weight in the total.
      lambda_sdt (float): Smooth-L1 (non-boundary) weight inside the hybrid loss.
      lambda_boundary (float): L1 (boundary) weight inside the hybrid loss.
      bce_pos_weight (float): Positive-class weight of the BCE term (> 0).
      focal_gamma (float): Focal exponent; 0 keeps plain BCE.
      focal_alpha (float): Focal class balance in [0, 1].
    """
    lambda_dice: float = DEFAULT_LAMBDA_DICE
    lambda_centroid: float = DEFAULT_LAMBDA_CENTROID
    lambda_hybrid: float = DEFAULT_LAMBDA_HYBRID
    lambda_sdt: float = DEFAULT_LAMBDA_SDT
    lambda_boundary: float = DEFAULT_LAMBDA_BOUNDARY
    bce_pos_weight: float = 1.0
    focal_gamma: float = 0.0
    focal_alpha: float = 0.25

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise ParameterError(f"LossWeights.{name} must be finite, got {value}")
        for name in ("lambda_dice", "lambda_centroid", "lambda_hybrid", "lambda_sdt",
                     "lambda_boundary", "focal_gamma"):
            if getattr(self, name) < 0:
                raise ParameterError(f"LossWeights.{name} must be >= 0, got {getattr(self, name)}")
        if self.bce_pos_weight <= 0:
            raise ParameterError(f"LossWeights.bce_pos_weight must be > 0, got {self.bce_pos_weight}")
        if not 0 <= self.focal_alpha <= 1:
            raise ParameterError(f"LossWeights.focal_alpha must lie in [0, 1], got {self.focal_alpha}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, values):
        return dataclass_from_dict(cls, values)

    @classmethod
    def from_json(cls, path, overrides=None):
        return load_json_config(path, cls, overrides)


@dataclass
class LossValue:
    """
    A loss and its gradient with respect to the prediction.

    Attributes:
      total (float): The scalar loss.
      components (dict): Named unweighted components (bce, dice, focal, centroid, sdt, boundary,
                         plus the seg and hybrid sub-totals where they apply).
      gradient (np.ndarray): d total / d prediction, same shape as the prediction.
    """
    total: float
    components: dict = field(default_factory=dict)
    gradient: np.ndarray = None


def as_float_array(values, name):
    array = np.asarray(getattr(values, "data", values), dtype=np.float64)
    if array.ndim == 3 and array.shape[2] == 1:
        array = array[:, :, 0]
    return array


def check_same_shape(pred, target, what):
    if pred.shape != target.shape:
        raise DimensionError(f"{what}: prediction shape {pred.shape} != target shape {target.shape}")
