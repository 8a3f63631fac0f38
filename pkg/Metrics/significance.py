from typing import NamedTuple

import numpy as np

from config.constants import CONFIDENCE_LEVEL, DEFAULT_N_BOOT, EXACT_PERMUTATION_LIMIT
from config.exceptions import ParameterError, ValidationError

# Relative slack when comparing permuted statistics with the observed one.
_TIE_TOLERANCE = 1e-12


class SignificanceResult(NamedTuple):
    p_value: float
    ci_a: tuple
    ci_b: tuple


def sign_flip_means(differences, n_boot, rng):
    """
    Mean paired difference under sign flips: every assignment when n <= 12, else n_boot random ones.
    """
    n = differences.size
    if n <= EXACT_PERMUTATION_LIMIT:
        codes = np.arange(2 ** n)[:, np.newaxis]
        signs = 1.0 - 2.0 * ((codes >> np.arange(n)) & 1)
    else:
        signs = rng.choice([-1.0, 1.0], size=(n_boot, n))
    return signs @ differences / n


def bootstrap_ci(sample, n_boot, rng, confidence=CONFIDENCE_LEVEL):
    """
    Percentile bootstrap confidence interval of the mean.

    Returns:
      tuple: (low, high); a constant sample gives (c, c).
    """
    sample = np.asarray(sample, dtype=np.float64)
    if np.ptp(sample) == 0:
        return float(sample[0]), float(sample[0])
    indices = rng.integers(0, sample.size, size=(n_boot, sample.size))
    means = sample[indices].mean(axis=1)
    tail = 100.0 * (1.0 - confidence) / 2.0
    low, high = np.percentile(means, [tail, 100.0 - tail])
    return float(low), float(high)


def paired_significance(scores_a, scores_b, n_boot=DEFAULT_N_BOOT, seed=0, confidence=CONFIDENCE_LEVEL):
    """
    Two-sided paired permutation test on the mean difference, plus bootstrap CIs of each mean.

    With n <= 12 pairs every sign assignment is enumerated, so the p-value is exact; larger
    samples use n_boot random sign flips and the (count + 1) / (n_boot + 1) estimate.

    Parameters:
      scores_a (list of float): Per-partition scores of configuration a.
      scores_b (list of float): Paired scores of configuration b.
      n_boot (int): Resamples for the random test and for the bootstrap.
      seed (int): Seed of the random generator.
      confidence (float): CI coverage.

    Returns:
      SignificanceResult: (p_value, ci_a, ci_b).

    Raises:
      ValidationError: If the samples differ in length or have fewer than 2 values.
    """
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError(f"Paired samples must have equal length, got {a.size} and {b.size}")
    if a.size < 2:
        raise ValidationError(f"Paired samples need at least 2 values, got {a.size}")
    if n_boot < 1:
        raise ParameterError(f"n_boot must be >= 1, got {n_boot}")
    rng = np.random.default_rng(seed)

    differences = a - b
    observed = abs(differences.mean())
    permuted = np.abs(sign_flip_means(differences, n_boot, rng))
    extreme = int(np.count_nonzero(permuted >= observed * (1.0 - _TIE_TOLERANCE)))
    if a.size <= EXACT_PERMUTATION_LIMIT:
        p_value = extreme / permuted.size
    else:
        p_value = (extreme + 1) / (permuted.size + 1)

    ci_a = bootstrap_ci(a, n_boot, rng, confidence)
    ci_b = bootstrap_ci(b, n_boot, rng, confidence)
    return SignificanceResult(p_value=float(min(p_value, 1.0)), ci_a=ci_a, ci_b=ci_b)
