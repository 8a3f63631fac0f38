import dataclasses
import json
import os
from pathlib import Path

from Cryptodome.Hash import SHA256

from config.constants import THREADS_ENV_VAR
from config.exceptions import ParameterError, RasterIOError, ValidationError


def dataclass_from_dict(cls, values):
    """
    Builds a configuration dataclass from a plain dictionary, rejecting unknown keys.

    Lists are converted to tuples for fields whose default is a tuple, so JSON round-trips
    produce equal objects.

    Parameters:
      cls (type): A dataclass type.
      values (dict): Field values; missing fields keep their defaults.

    Returns:
      An instance of cls.

    Raises:
      ParameterError: If values contains a key that is not a field of cls.
    """
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - set(fields))
    if unknown:
        raise ParameterError(f"Unknown {cls.__name__} keys: {', '.join(unknown)}")
    converted = {}
    for key, value in values.items():
        if isinstance(value, list):
            value = tuple(value)
        converted[key] = value
    return cls(**converted)


def load_json_config(path, cls, overrides=None):
    """
    Reads one JSON configuration file and applies per-flag overrides on top of it.

    Parameters:
      path (str | Path | None): JSON file; None means "defaults only".
      cls (type): The configuration dataclass to build.
      overrides (dict, optional): Values that win over the file (None values are ignored).

    Returns:
      An instance of cls.
    """
    values = {}
    if path is not None:
        values = read_json(path)
        if not isinstance(values, dict):
            raise ValidationError(f"Config file {path} must contain a JSON object")
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return dataclass_from_dict(cls, values)


def read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError as e:
        raise RasterIOError(f"Cannot read {path}: file does not exist") from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"Cannot parse JSON in {path}: {e}") from e


def write_json(path, payload):
    ensure_parent_dir(path)
    try:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")
    except OSError as e:
        raise RasterIOError(f"Cannot write {path}: {e.strerror}") from e


def ensure_parent_dir(path):
    parent = Path(path).parent
    if str(parent) and not parent.exists():
        try:
            parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise RasterIOError(f"Cannot create directory {parent}: {e.strerror}") from e


def file_digest(path):
    """
    Returns the hex SHA-256 digest of a file's bytes.

    Parameters:
      path (str | Path): The file to hash.

    Returns:
      str: 64 lowercase hex characters.
    """
    digest = SHA256.new()
    try:
        with open(path, "rb") as handle:
            for chunk in iter(lambda: handle.read(1 << 20), b""):
                digest.update(chunk)
    except OSError as e:
        raise RasterIOError(f"Cannot read {path}: {e.strerror}") from e
    return digest.hexdigest()


def resolve_thread_count(threads=None):
    """
    Resolves the worker cap: explicit value, then the DEADWOOD_THREADS environment variable, then 1.

    Parameters:
      threads (int, optional): Explicit cap from the command line.

    Returns:
      int: A positive worker count.
    """
    if threads is None:
        env_value = os.environ.get(THREADS_ENV_VAR)
        if env_value:
            try:
                threads = int(env_value)
            except ValueError as e:
                raise ParameterError(f"{THREADS_ENV_VAR} must be an integer, got {env_value!r}") from e
        else:
            threads = 1
    if threads < 1:
        raise ParameterError(f"Thread count must be >= 1, got {threads}")
    return threads
