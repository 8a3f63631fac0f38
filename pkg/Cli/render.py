import numpy as np
from Cryptodome.Hash import HMAC, SHA256
from PIL import Image

from config.exceptions import DimensionError, RasterIOError, ValidationError
from config.logger import get_logger
from config.utils import ensure_parent_dir

logger = get_logger(__name__)

PALETTE_KEY = b"deadwood-label-palette"
BACKGROUND = (0, 0, 0)
OVERLAY_ALPHA = 0.6
# Palette channels stay in [64, 255] so no instance colour can equal the background.
PALETTE_FLOOR = 64
STRETCH_PERCENTILES = (2.0, 98.0)
# Band order of a 4-band base: R, G, B, NIR. False colour shows NIR as red, red as green, green as blue.
FALSE_COLOR_BANDS = (3, 0, 1)


def label_color(label, attempt=0):
    """Derives an RGB colour from a label id with HMAC-SHA256; attempt > 0 re-draws after a collision."""
    mac = HMAC.new(PALETTE_KEY, f"{label}:{attempt}".encode("utf-8"), digestmod=SHA256).digest()
    return tuple(PALETTE_FLOOR + byte * (255 - PALETTE_FLOOR) // 255 for byte in mac[:3])


def label_palette(ids):
    """
    Assigns every label id a distinct colour, deterministically.

    Parameters:
      ids (iterable of int): Label ids (background excluded).

    Returns:
      dict: id -> (r, g, b).
    """
    palette = {}
    used = {BACKGROUND}
    for label in sorted(int(i) for i in ids):
        attempt = 0
        color = label_color(label)
        while color in used:
            attempt += 1
            color = label_color(label, attempt)
        palette[label] = color
        used.add(color)
    return palette


def _stretch(band):
    band = np.asarray(band, dtype=np.float64)
    finite = band[np.isfinite(band)]
    if not finite.size:
        return np.zeros(band.shape, dtype=np.uint8)
    low, high = np.percentile(finite, STRETCH_PERCENTILES)
    if high <= low:
        return np.zeros(band.shape, dtype=np.uint8)
    scaled = np.clip((band - low) / (high - low), 0.0, 1.0)
    return np.round(scaled * 255).astype(np.uint8)


def base_image(base, false_color=False):
    """
    Turns an image raster into an RGB uint8 array.

    Parameters:
      base (MultiChannelRaster): Image bands.
      false_color (bool): Needs 4 bands (R, G, B, NIR); otherwise the first band is shown grayscale.

    Returns:
      np.ndarray: (height, width, 3) uint8.
    """
    if false_color:
        if base.channels < 4:
            raise ValidationError(f"False colour needs 4 bands (R, G, B, NIR), got {base.channels}")
        return np.stack([_stretch(base.channel(index)) for index in FALSE_COLOR_BANDS], axis=-1)
    gray = _stretch(base.channel(0))
    return np.repeat(gray[:, :, None], 3, axis=2)


def render_labels(labels, base=None, false_color=False):
    """
    Paints each instance in its palette colour, over a base image when one is given.

    Parameters:
      labels (InstanceMap): Instances to draw.
      base (MultiChannelRaster, optional): Background image on the same grid.
      false_color (bool): Render the base as a NIR false-colour composite.

    Returns:
      np.ndarray: (height, width, 3) uint8 RGB.
    """
    if base is not None and (base.height, base.width) != labels.shape:
        raise DimensionError(f"Base image is {base.height}x{base.width}, "
                             f"labels are {labels.shape[0]}x{labels.shape[1]}")
    if base is None:
        canvas = np.full(labels.shape + (3,), BACKGROUND, dtype=np.uint8)
    else:
        canvas = base_image(base, false_color)
    palette = label_palette(labels.ids())
    if not palette:
        return canvas

    lut = np.zeros((int(labels.labels.max()) + 1, 3), dtype=np.float64)
    for label, color in palette.items():
        lut[label] = color
    foreground = labels.labels > 0
    colors = lut[labels.labels[foreground]]
    if base is None:
        canvas[foreground] = colors.astype(np.uint8)
    else:
        blended = OVERLAY_ALPHA * colors + (1.0 - OVERLAY_ALPHA) * canvas[foreground]
        canvas[foreground] = np.round(blended).astype(np.uint8)
    return canvas


def write_png(rgb, path):
    ensure_parent_dir(path)
    try:
        Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8)).save(path, format="PNG")
    except OSError as e:
        raise RasterIOError(f"Cannot write {path}: {e}") from e


def render(labels, out, base=None, false_color=False):
    """
    Writes a PNG overlay of an InstanceMap.

    Parameters:
      labels (InstanceMap): Instances; an empty map gives a solid background image.
      out (str | Path): PNG path.
      base (MultiChannelRaster, optional): Background image.
      false_color (bool): NIR false-colour rendering of a 4-band base.

    Raises:
      RasterIOError: If the path cannot be written.
    """
    write_png(render_labels(labels, base, false_color), out)
    logger.debug("rendered %d instance(s) to %s", labels.count, out)
