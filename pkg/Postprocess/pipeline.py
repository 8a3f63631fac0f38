import time

import numpy as np

from Postprocess.hybrid_filter import hybrid_filter
from Postprocess.pipeline_config import PipelineConfig
from Postprocess.threshold_filter import label_components, threshold_and_filter
from Postprocess.tiling import segment_tiled
from Postprocess.vectorize import vectorize
from RasterCore.raster import InstanceMap
from config.constants import CENTROID_CHANNEL, HYBRID_CHANNEL, SEGMENTATION_CHANNEL
from config.exceptions import DimensionError
from config.logger import get_logger
from config.utils import resolve_thread_count

logger = get_logger(__name__)


class _StageClock:
    def __init__(self, stats):
        self.stats = stats
        self.timings = {}
        self.started = time.perf_counter()

    def lap(self, stage):
        now = time.perf_counter()
        self.timings[stage] = now - self.started
        self.started = now

    def finish(self, **counts):
        if self.stats is not None:
            self.stats.setdefault("timings", {}).update(self.timings)
            self.stats.update(counts)


def run_pipeline(pred_stack, cfg=None, threads=None, stats=None):
    """
    Fuses a three-channel prediction stack into individual tree instances.

    Stages run per cfg.stages: thresholding (always), minimum-area filtering, hybrid boundary
    filtering and marker-controlled watershed. Without watershed the instances are the connected
    components of the mask.

    Parameters:
      pred_stack (MultiChannelRaster): Channels (segmentation probability, centroid, hybrid).
      cfg (PipelineConfig, optional): Defaults apply when omitted.
      threads (int, optional): Worker cap for tiled stages.
      stats (dict, optional): Filled with per-stage timings and marker counts.

    Returns:
      tuple: (InstanceMap, InstanceSet).
    """
    cfg = cfg or PipelineConfig()
    if pred_stack.channels != 3:
        raise DimensionError(f"Prediction stack must have 3 channels, got {pred_stack.channels}")
    threads = resolve_thread_count(threads)
    clock = _StageClock(stats)
    seg = np.asarray(pred_stack.channel(SEGMENTATION_CHANNEL), dtype=np.float64)
    centroid = np.asarray(pred_stack.channel(CENTROID_CHANNEL), dtype=np.float64)
    hybrid = np.asarray(pred_stack.channel(HYBRID_CHANNEL), dtype=np.float64)

    if cfg.filtering:
        mask = threshold_and_filter(seg, cfg)
    else:
        mask = seg >= cfg.seg_threshold
    clock.lap("threshold")
    if cfg.hybrid_filtering:
        mask = hybrid_filter(mask, hybrid, cfg)
        clock.lap("hybrid_filter")

    marker_count = discarded = 0
    if cfg.watershed:
        labels, markers, discarded = segment_tiled(mask, centroid, cfg, threads)
        marker_count = len(markers)
        clock.lap("watershed")
    else:
        labels, _ = label_components(mask, cfg.connectivity)
        clock.lap("components")

    instance_map = InstanceMap(labels, geo=pred_stack.geo)
    instance_set = vectorize(instance_map, pred_stack.geo, cfg.vectorize_mode)
    clock.lap("vectorize")
    clock.finish(markers=marker_count, discarded_markers=discarded, instances=instance_map.count)
    logger.info("pipeline stages %s produced %d instance(s)", list(cfg.stages), instance_map.count)
    return instance_map, instance_set
