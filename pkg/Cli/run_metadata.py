import time
from dataclasses import dataclass, field

from config.constants import VERSION
from config.utils import file_digest


@dataclass
class RunMetadata:
    """
    Provenance embedded in every JSON output and raster header the CLI writes.

    Attributes:
      command (str): The subcommand that produced the output.
      version (str): Tool version.
      config (dict): Resolved configuration echo.
      inputs (dict): Input path -> SHA-256 hex digest.
      timings (dict): Stage name -> wall-clock seconds.
    """
    command: str
    version: str = VERSION
    config: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def add_input(self, path):
        self.inputs[str(path)] = file_digest(path)

    def time_stage(self, stage):
        return _StageTimer(self, stage)

    def to_dict(self, include_timings=True):
        """Raster headers leave the timings out so the files stay byte-reproducible."""
        values = {
            "command": self.command,
            "version": self.version,
            "config": self.config,
            "inputs": dict(sorted(self.inputs.items())),
        }
        if include_timings:
            values["timings"] = dict(self.timings)
        return values


class _StageTimer:
    def __init__(self, metadata, stage):
        self.metadata = metadata
        self.stage = stage
        self.started = None

    def __enter__(self):
        self.started = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.metadata.timings[self.stage] = self.metadata.timings.get(self.stage, 0.0) + \
            time.perf_counter() - self.started
        return False
