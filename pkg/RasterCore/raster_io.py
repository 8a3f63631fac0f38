"""
Raster container I/O.

A container is one UTF-8 JSON header line terminated by '\\n', followed by the raw little-endian
float32 payload in row-major, channel-last order. Header keys: width, height, channels,
dtype ("f32le"), geotransform [origin_x, origin_y, pixel_size_x, pixel_size_y], channel_roles,
and an optional metadata object.
"""

import json

import numpy as np

from RasterCore.raster import GeoTransform, MultiChannelRaster
from config.constants import RASTER_DTYPE
from config.exceptions import FormatError, RasterIOError, TruncationError
from config.logger import get_logger
from config.utils import ensure_parent_dir

logger = get_logger(__name__)

REQUIRED_KEYS = ("width", "height", "channels", "dtype", "geotransform", "channel_roles")
PAYLOAD_DTYPE = np.dtype("<f4")


def encode_raster(raster):
    """
    Serialises a raster into container bytes.

    Parameters:
      raster (MultiChannelRaster): The raster to encode.

    Returns:
      bytes: Header line followed by the payload.
    """
    header = {
        "width": raster.width,
        "height": raster.height,
        "channels": raster.channels,
        "dtype": RASTER_DTYPE,
        "geotransform": raster.geo.to_list(),
        "channel_roles": list(raster.channel_roles),
    }
    if raster.metadata:
        header["metadata"] = raster.metadata
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return header_bytes + b"\n" + raster.data.astype(PAYLOAD_DTYPE, copy=False).tobytes(order="C")


def decode_raster(blob, source="<bytes>"):
    """
    Parses container bytes into a raster.

    Parameters:
      blob (bytes): Complete container contents.
      source (str): Name used in error messages.

    Returns:
      MultiChannelRaster: The decoded raster.

    Raises:
      FormatError: If the header is missing, not JSON, or lacks required keys.
      TruncationError: If the payload length disagrees with the header.
      ValidationError: If the payload holds non-finite values.
    """
    newline = blob.find(b"\n")
    if newline < 0:
        raise FormatError(f"{source}: missing header line")
    try:
        header = json.loads(blob[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{source}: header is not valid UTF-8 JSON ({e})") from e
    if not isinstance(header, dict):
        raise FormatError(f"{source}: header must be a JSON object")
    missing = [key for key in REQUIRED_KEYS if key not in header]
    if missing:
        raise FormatError(f"{source}: header lacks {', '.join(missing)}")
    if header["dtype"] != RASTER_DTYPE:
        raise FormatError(f"{source}: unsupported dtype {header['dtype']!r}")
    try:
        width, height, channels = int(header["width"]), int(header["height"]), int(header["channels"])
    except (TypeError, ValueError) as e:
        raise FormatError(f"{source}: width/height/channels must be integers") from e
    if width < 1 or height < 1 or channels < 1:
        raise FormatError(f"{source}: non-positive dimensions {height}x{width}x{channels}")

    payload = blob[newline + 1:]
    expected = width * height * channels * PAYLOAD_DTYPE.itemsize
    if len(payload) != expected:
        raise TruncationError(
            f"{source}: payload has {len(payload)} bytes, header declares {expected} "
            f"({height}x{width}x{channels} float32)")
    data = np.frombuffer(payload, dtype=PAYLOAD_DTYPE).reshape(height, width, channels)
    return MultiChannelRaster(
        data,
        geo=GeoTransform.from_list(header["geotransform"]),
        channel_roles=header["channel_roles"],
        metadata=header.get("metadata"),
    )


def read_raster(path):
    """
    Reads a raster container file.

    Parameters:
      path (str | Path): Container file.

    Returns:
      MultiChannelRaster: The stored raster, bitwise identical to what was written.
    """
    try:
        with open(path, "rb") as handle:
            blob = handle.read()
    except OSError as e:
        raise RasterIOError(f"Cannot read raster {path}: {e.strerror}") from e
    raster = decode_raster(blob, source=str(path))
    logger.debug("read %s (%dx%dx%d)", path, raster.height, raster.width, raster.channels)
    return raster


def write_raster(raster, path):
    """
    Writes a raster container file readable by read_raster with a bitwise-equal payload.

    Parameters:
      raster (MultiChannelRaster): The raster to store.
      path (str | Path): Destination file.
    """
    blob = encode_raster(raster)
    ensure_parent_dir(path)
    try:
        with open(path, "wb") as handle:
            handle.write(blob)
    except OSError as e:
        raise RasterIOError(f"Cannot write raster {path}: {e.strerror}") from e
    logger.debug("wrote %s (%d bytes)", path, len(blob))
