import math
from dataclasses import asdict, dataclass

from config.constants import (DEFAULT_BIN_SIZE, DEFAULT_OVERLAP_FRACTION, DEFAULT_PATCH_SIZE, DEFAULT_RATIOS,
                              PARTITIONS)
from config.exceptions import ParameterError
from config.utils import dataclass_from_dict, load_json_config

RATIO_TOLERANCE = 1e-9


def check_ratios(ratios):
    if len(ratios) != len(PARTITIONS):
        raise ParameterError(f"Expected {len(PARTITIONS)} ratios (train, validation, test), got {len(ratios)}")
    if any(not math.isfinite(r) or r < 0 for r in ratios):
        raise ParameterError(f"Ratios must be finite and non-negative, got {list(ratios)}")
    if abs(sum(ratios) - 1.0) > RATIO_TOLERANCE:
        raise ParameterError(f"Ratios must sum to 1, got {sum(ratios)}")


@dataclass(frozen=True)
class SplitConfig:
    """
    Parameters of the spatially stratified split.

    Attributes:
      bin_size (float): Edge of the square geographic bins, map units.
      ratios (tuple): Target (train, validation, test) fractions of dead-tree segments.
      seed (int): Seed of the tie-breaking shuffle.
      patch_size (int): Patch edge in pixels.
      overlap_fraction (float): Overlap of neighbouring patches in [0, 1).
      pad (bool): Zero-pad images smaller than a patch instead of failing.
    """
    bin_size: float = DEFAULT_BIN_SIZE
    ratios: tuple = DEFAULT_RATIOS
    seed: int = 0
    patch_size: int = DEFAULT_PATCH_SIZE
    overlap_fraction: float = DEFAULT_OVERLAP_FRACTION
    pad: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        self.validate()

    def validate(self):
        if not self.bin_size > 0:
            raise ParameterError(f"bin_size must be positive, got {self.bin_size}")
        check_ratios(self.ratios)
        if int(self.patch_size) != self.patch_size or self.patch_size < 1:
            raise ParameterError(f"patch_size must be a positive integer, got {self.patch_size}")
        if not 0 <= self.overlap_fraction < 1:
            raise ParameterError(f"overlap_fraction must lie in [0, 1), got {self.overlap_fraction}")

    def to_dict(self):
        values = asdict(self)
        values["ratios"] = list(self.ratios)
        return values

    @classmethod
    def from_dict(cls, values):
        return dataclass_from_dict(cls, values)

    @classmethod
    def from_json(cls, path, overrides=None):
        return load_json_config(path, cls, overrides)
