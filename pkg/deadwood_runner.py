"""
Helper functions to set up and run postprocessing experiments.

This module provides utility functions for choosing a pipeline configuration,
running it over a corpus of prediction stacks with progress display,
aggregating the instance-level metrics, and printing them.
"""

from concurrent.futures import ThreadPoolExecutor

from tqdm import tqdm

from Metrics.report import evaluate_image, evaluate_images
from Postprocess.pipeline import run_pipeline
from Postprocess.pipeline_config import PipelineConfig, stage_config
from config.constants import DEFAULT_IOU_THRESHOLD, STAGE_CHOICES, STAGE_TITLES
from config.exceptions import ParameterError
from config.utils import resolve_thread_count


def get_pipeline_config(choice, base=None):
    """
    Returns the pipeline configuration of one ablation row.

    Parameters:
      choice (str): One of RAW_SEGMENTS, SEGMENT_FILTERING, WATERSHED_SEGMENTATION or
                    FINAL_SEGMENTATION ("raw", "filter", "watershed", "final").
      base (PipelineConfig, optional): Thresholds shared by every row. Defaults to PipelineConfig().

    Returns:
      PipelineConfig: base with the row's stage flags.

    Raises:
      ParameterError: If the choice does not name a known row.
    """
    if choice not in STAGE_CHOICES:
        raise ParameterError(f"Not a valid pipeline choice: {choice!r} (expected one of {', '.join(STAGE_CHOICES)})")
    return stage_config(choice, base or PipelineConfig())


def postprocess_scene(scene, cfg, threads=1):
    """
    Runs the pipeline on one corpus scene.

    Parameters:
      scene (tuple): (name, prediction MultiChannelRaster, ground-truth InstanceMap, annotations).
      cfg (PipelineConfig): Configuration to run.
      threads (int): Worker cap inside the pipeline.

    Returns:
      tuple: (name, predicted InstanceMap, ground-truth InstanceMap).
    """
    name, pred_stack, gt, _ = scene
    instance_map, _ = run_pipeline(pred_stack, cfg, threads=threads)
    return name, instance_map, gt


def run_corpus(scenes, cfg, threads=None, label="progress"):
    """
    Postprocesses every scene of a corpus, in scene order.

    Parameters:
      scenes (list): Corpus scenes as returned by Synth.corpus.load_corpus.
      cfg (PipelineConfig): Configuration to run.
      threads (int, optional): Worker cap across scenes.
      label (str): Progress bar description.

    Returns:
      list of tuple: (name, predicted InstanceMap, ground-truth InstanceMap) per scene.
    """
    threads = resolve_thread_count(threads)
    with ThreadPoolExecutor(max_workers=threads) as executor:
        results = executor.map(lambda scene: postprocess_scene(scene, cfg), scenes)
        return list(tqdm(results, total=len(scenes), desc=label, leave=False))


def evaluate_corpus(scenes, cfg, iou_threshold=DEFAULT_IOU_THRESHOLD, threads=None, label="pipeline"):
    """
    Runs one configuration over a corpus and returns the aggregated EvalReport.
    """
    pairs = run_corpus(scenes, cfg, threads, label=label)
    return evaluate_images(pairs, iou_threshold, config=cfg.to_dict(), threads=resolve_thread_count(threads))


def per_scene_scores(scenes, cfg, iou_threshold=DEFAULT_IOU_THRESHOLD, threads=None):
    """
    Per-scene pixel IoU, tree IoU and centroid RMSE of one configuration, in scene order.

    Returns:
      dict: {"pixel_iou": [...], "tree_iou": [...], "centroid_rmse_px": [...]}; scenes without ground
            truth score tree IoU 0 and scenes without matches have centroid RMSE None.
    """
    scores = {"pixel_iou": [], "tree_iou": [], "centroid_rmse_px": []}
    for name, pred, gt in run_corpus(scenes, cfg, threads, label="scores"):
        image = evaluate_image(pred, gt, iou_threshold, name)
        scores["pixel_iou"].append(image.pixel_iou)
        scores["tree_iou"].append(image.tree_iou if image.tree_iou is not None else 0.0)
        scores["centroid_rmse_px"].append(image.centroid_rmse_px)
    return scores


def _format(value, digits=4):
    return "n/a" if value is None else f"{value:.{digits}f}"


def print_evaluation_stats(report, choice=None):
    """
    Prints the headline metrics of an EvalReport.

    Parameters:
      report (EvalReport): Aggregated corpus metrics.
      choice (str, optional): Ablation row the report belongs to.
    """
    print("\n")
    if choice is not None:
        print("Configuration:", STAGE_TITLES.get(choice, choice))
    print("Images =", len(report.per_image))
    print("TP =", report.tp, " FP =", report.fp, " FN =", report.fn)
    print("Pixel IoU:", _format(report.pixel_iou))
    print("Tree IoU:", _format(report.tree_iou))
    print("Centroid RMSE (px):", _format(report.centroid_rmse_px, 2))
    print("Precision / Recall / F1: {} / {} / {}".format(
        _format(report.precision), _format(report.recall), _format(report.f1)))
    print("Macro F1:", _format(report.macro.get("f1")))


def run_experiment(scenes, choice, base=None, iou_threshold=DEFAULT_IOU_THRESHOLD, threads=None):
    """
    Runs one ablation row over a corpus, prints its statistics and returns its report.

    Parameters:
      scenes (list): Corpus scenes as returned by Synth.corpus.load_corpus.
      choice (str): Ablation row name.
      base (PipelineConfig, optional): Shared thresholds.
      iou_threshold (float): Matching threshold.
      threads (int, optional): Worker cap.

    Returns:
      EvalReport: The row's aggregated metrics.
    """
    cfg = get_pipeline_config(choice, base)
    report = evaluate_corpus(scenes, cfg, iou_threshold, threads, label=STAGE_TITLES[choice])
    print_evaluation_stats(report, choice)
    return report
