import math

import numpy as np

from config.constants import HEATMAP_TRUNCATE
from config.exceptions import ParameterError


def render_centroid_heatmap(centroids, sigma, shape):
    """
    Renders peak-normalised Gaussian kernels around centroids, combined by maximum.

    heatmap(p) = max over c of exp(-|p - c|^2 / (2 sigma^2)), truncated at 4 sigma. Pixel centres
    sit at integer (row, col), so a centroid on a pixel centre yields exactly 1.0 there.

    Parameters:
      centroids (list): (row, col) pixel coordinates, possibly fractional.
      sigma (float): Kernel width in pixels (> 0).
      shape (tuple): (height, width).

    Returns:
      np.ndarray: float64 heatmap in [0, 1].
    """
    if not sigma > 0:
        raise ParameterError(f"Heatmap sigma must be positive, got {sigma}")
    height, width = shape
    heatmap = np.zeros((height, width), dtype=np.float64)
    radius = int(math.ceil(HEATMAP_TRUNCATE * sigma))
    for row, col in centroids:
        r0 = max(int(math.floor(row)) - radius, 0)
        r1 = min(int(math.ceil(row)) + radius, height - 1)
        c0 = max(int(math.floor(col)) - radius, 0)
        c1 = min(int(math.ceil(col)) + radius, width - 1)
        if r0 > r1 or c0 > c1:
            continue
        rr = np.arange(r0, r1 + 1, dtype=np.float64)[:, np.newaxis] - row
        cc = np.arange(c0, c1 + 1, dtype=np.float64)[np.newaxis, :] - col
        kernel = np.exp(-(rr * rr + cc * cc) / (2.0 * sigma * sigma))
        window = heatmap[r0:r1 + 1, c0:c1 + 1]
        np.maximum(window, kernel, out=window)
    return heatmap
