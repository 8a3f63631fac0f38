"""
Command-line dispatch for the deadwood tools.

Every subcommand reads its numeric configuration from one optional JSON file, applies the
per-flag overrides on top, and embeds the resolved configuration and the SHA-256 digests of its
inputs in everything it writes.
"""

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

from Cli.render import render
from Cli.run_metadata import RunMetadata
from Losses.loss_weights import LossWeights
from Losses.numeric_gradient import DEFAULT_STEP, loss_gradient_errors
from Losses.total_loss import COMPONENT_NAMES, total_loss
from Metrics.report import EvalConfig, ImageEvaluation, evaluate_images, shape_statistics
from Postprocess.pipeline import run_pipeline
from Postprocess.pipeline_config import PipelineConfig, stage_config
from Postprocess.vectorize import vectorize
from RasterCore.annotations import read_annotations, write_instance_set_geojson
from RasterCore.raster import GeoTransform, InstanceMap
from RasterCore.raster_io import read_raster, write_raster
from Splitter.split_config import SplitConfig
from Splitter.split_dataset import plan_split
from Synth.corpus import corpus, load_corpus, spec_grid_from_json
from Targets.rasterize import rasterize_polygons
from Targets.target_stack import build_target_stack
from ablation_tables import run_ablation_table, run_significance_table, synthetic_scenes
from config.constants import (ABLATION_DENSITY, DEFAULT_HEATMAP_SIGMA, DEFAULT_N_BOOT, DEFAULT_PIXEL_SIZE, EXIT_IO,
                              EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, PARTITIONS, STAGE_CHOICES, THREADS_ENV_VAR,
                              VECTORIZE_MODES, VERSION)
from config.exceptions import DeadwoodError, DimensionError, RasterIOError, ValidationError
from config.logger import configure_logging, get_logger
from config.utils import ensure_parent_dir, read_json, resolve_thread_count, write_json

logger = get_logger(__name__)

GEOJSON_SUFFIXES = (".geojson", ".json")


class UsageError(Exception):
    """The command line cannot be parsed."""


class _ParserExit(Exception):
    def __init__(self, status):
        super().__init__(status)
        self.status = status


class CommandParser(argparse.ArgumentParser):
    """ArgumentParser that reports problems to dispatch instead of exiting the process."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")

    def exit(self, status=0, message=None):
        if message:
            self._print_message(message, sys.stderr)
        raise _ParserExit(status)


def _int_pair(text):
    parts = text.split(",")
    try:
        values = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two integers 'a,b', got {text!r}")
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected two integers 'a,b', got {text!r}")
    return values


def _float_list(count):
    def parse(text):
        try:
            values = tuple(float(p) for p in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {count} comma-separated numbers, got {text!r}")
        if len(values) != count:
            raise argparse.ArgumentTypeError(f"expected {count} comma-separated numbers, got {text!r}")
        return values
    return parse


def _common_options():
    common = CommandParser(add_help=False)
    common.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS,
                        help="log debug messages")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help=f"worker cap (default: ${THREADS_ENV_VAR} or 1)")
    return common


def build_parser():
    common = _common_options()
    parser = CommandParser(prog="deadwood", description="Dead-tree instance segmentation tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument("--verbose", "-v", action="store_true", default=False, help="log debug messages")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"worker cap (default: ${THREADS_ENV_VAR} or 1)")
    commands = parser.add_subparsers(dest="command", metavar="command", required=True)

    targets = commands.add_parser("targets", parents=[common], help="build target stacks from annotations")
    targets.add_argument("--annotations", required=True, help="GeoJSON polygons")
    grid = targets.add_mutually_exclusive_group(required=True)
    grid.add_argument("--reference", help="raster whose grid the targets follow")
    grid.add_argument("--shape", type=_int_pair, help="height,width in pixels")
    targets.add_argument("--origin", type=_float_list(2), default=(0.0, 0.0), help="map x,y of the top-left corner")
    targets.add_argument("--pixel-size", type=float, default=DEFAULT_PIXEL_SIZE, help="map units per pixel")
    targets.add_argument("--sigma", type=float, default=DEFAULT_HEATMAP_SIGMA, help="heatmap kernel width, pixels")
    targets.add_argument("--out", required=True, help="target raster")
    targets.set_defaults(handler=cmd_targets)

    loss_eval = commands.add_parser("loss-eval", parents=[common], help="evaluate the losses of a prediction")
    loss_eval.add_argument("--pred", required=True, help="prediction raster (seg logits, centroid, hybrid)")
    loss_eval.add_argument("--targets", required=True, help="target raster")
    loss_eval.add_argument("--config", help="LossWeights JSON")
    loss_eval.add_argument("--check-gradient", action="store_true", help="compare gradients with finite differences")
    loss_eval.add_argument("--step", type=float, default=DEFAULT_STEP, help="finite-difference step")
    loss_eval.set_defaults(handler=cmd_loss_eval)

    postprocess = commands.add_parser("postprocess", parents=[common], help="fuse a prediction into instances")
    postprocess.add_argument("--pred", required=True, help="prediction raster")
    postprocess.add_argument("--config", help="PipelineConfig JSON")
    postprocess.add_argument("--out-labels", required=True, help="instance label raster")
    postprocess.add_argument("--out-geojson", help="vectorised instances")
    postprocess.add_argument("--stages", choices=STAGE_CHOICES, help="ablation row to run")
    postprocess.add_argument("--seg-threshold", type=float)
    postprocess.add_argument("--min-area", type=int)
    postprocess.add_argument("--smooth-sigma", type=float)
    postprocess.add_argument("--peak-min-distance", type=float)
    postprocess.add_argument("--vectorize-mode", choices=VECTORIZE_MODES)
    postprocess.add_argument("--crs-epsg", type=int, help="EPSG code written to the GeoJSON")
    postprocess.set_defaults(handler=cmd_postprocess)

    evaluate = commands.add_parser("evaluate", parents=[common], help="instance-level evaluation")
    evaluate.add_argument("--pred-labels", required=True, help="predicted label raster")
    evaluate.add_argument("--gt", required=True, help="ground truth: GeoJSON polygons or a label raster")
    evaluate.add_argument("--config", help="EvalConfig JSON")
    evaluate.add_argument("--iou-threshold", type=float)
    evaluate.add_argument("--report", required=True, help="EvalReport JSON")
    evaluate.add_argument("--csv", help="per-image metrics as CSV")
    evaluate.add_argument("--shape-stats", action="store_true", help="add size and compactness histograms")
    evaluate.set_defaults(handler=cmd_evaluate)

    split = commands.add_parser("split", parents=[common], help="spatially stratified dataset split")
    split.add_argument("--annotations", required=True, help="GeoJSON polygons")
    split.add_argument("--images", required=True, help="image manifest JSON")
    split.add_argument("--config", help="SplitConfig JSON")
    split.add_argument("--bin-size", type=float)
    split.add_argument("--ratios", type=_float_list(len(PARTITIONS)), help="train,validation,test")
    split.add_argument("--seed", type=int)
    split.add_argument("--patch-size", type=int)
    split.add_argument("--overlap", type=float, dest="overlap_fraction")
    split.add_argument("--out", required=True, help="split JSON")
    split.set_defaults(handler=cmd_split)

    synth = commands.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    synth.add_argument("--spec", required=True, help="SceneSpec JSON (object or list)")
    synth.add_argument("--out-dir", required=True)
    synth.set_defaults(handler=cmd_synth)

    render_cmd = commands.add_parser("render", parents=[common], help="render instances to PNG")
    render_cmd.add_argument("--labels", required=True, help="label raster")
    render_cmd.add_argument("--base", help="image raster drawn underneath")
    render_cmd.add_argument("--false-color", action="store_true", help="NIR false colour for a 4-band base")
    render_cmd.add_argument("--out", required=True, help="PNG path")
    render_cmd.set_defaults(handler=cmd_render)

    ablate = commands.add_parser("ablate", parents=[common], help="run the four pipeline configurations")
    source = ablate.add_mutually_exclusive_group(required=True)
    source.add_argument("--corpus", "--manifest", dest="corpus", help="corpus manifest written by synth")
    source.add_argument("--scenes", type=int, help="generate this many moderately corrupted scenes in memory")
    ablate.add_argument("--config", help="PipelineConfig JSON shared by every row")
    ablate.add_argument("--iou-threshold", type=float)
    ablate.add_argument("--significance", action="store_true", help="also print the raw vs final significance table")
    ablate.add_argument("--n-boot", type=int, default=DEFAULT_N_BOOT)
    ablate.add_argument("--seed", type=int, default=0)
    ablate.add_argument("--density", type=float, default=ABLATION_DENSITY, help="trees per hectare")
    ablate.add_argument("--noise-sigma", type=float, default=0.1)
    ablate.add_argument("--blur-sigma", type=float, default=1.5)
    ablate.add_argument("--overlap-probability", type=float, default=0.3)
    ablate.add_argument("--report", help="table JSON")
    ablate.set_defaults(handler=cmd_ablate)
    return parser


def cmd_targets(args):
    metadata = RunMetadata("targets", config={"sigma": args.sigma})
    metadata.add_input(args.annotations)
    if args.reference is not None:
        reference = read_raster(args.reference)
        metadata.add_input(args.reference)
        geo, shape = reference.geo, reference.shape
    else:
        geo = GeoTransform(args.origin[0], args.origin[1], args.pixel_size, args.pixel_size)
        shape = args.shape
    metadata.config.update(shape=list(shape), geotransform=geo.to_list())
    annotations = read_annotations(args.annotations)
    stack = build_target_stack(annotations, geo, shape, args.sigma)
    write_raster(stack.to_raster(metadata=metadata.to_dict(include_timings=False)), args.out)
    print(f"targets: {stack.instance_map.count} instance(s), {stack.dropped} dropped -> {args.out}")
    return EXIT_OK


def cmd_loss_eval(args):
    weights = LossWeights.from_json(args.config)
    pred = read_raster(args.pred)
    target = read_raster(args.targets)
    value = total_loss(pred, target, weights)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["component", "value"])
    for name in COMPONENT_NAMES:
        writer.writerow([name, f"{value.components[name]:.10g}"])
    writer.writerow(["total", f"{value.total:.10g}"])
    if args.check_gradient:
        writer.writerow([])
        writer.writerow(["loss", "relative_gradient_error"])
        for name, error in loss_gradient_errors(pred, target, weights, args.step).items():
            writer.writerow([name, f"{error:.3e}"])
    return EXIT_OK


def cmd_postprocess(args, threads):
    overrides = {
        "seg_threshold": args.seg_threshold,
        "min_area": args.min_area,
        "smooth_sigma": args.smooth_sigma,
        "peak_min_distance": args.peak_min_distance,
        "vectorize_mode": args.vectorize_mode,
    }
    cfg = PipelineConfig.from_json(args.config, overrides)
    if args.stages is not None:
        cfg = stage_config(args.stages, cfg)
    metadata = RunMetadata("postprocess", config=cfg.to_dict())
    metadata.add_input(args.pred)
    if args.config:
        metadata.add_input(args.config)
    pred = read_raster(args.pred)
    stats = {}
    instance_map, instance_set = run_pipeline(pred, cfg, threads=threads, stats=stats)
    metadata.timings.update(stats.get("timings", {}))
    write_raster(instance_map.to_raster(metadata=metadata.to_dict(include_timings=False)), args.out_labels)
    if args.out_geojson:
        write_instance_set_geojson(instance_set, args.out_geojson, crs_epsg=args.crs_epsg,
                                   metadata=metadata.to_dict())
    print(f"postprocess: {instance_map.count} instance(s), {stats.get('markers', 0)} marker(s), "
          f"{stats.get('discarded_markers', 0)} discarded -> {args.out_labels}")
    return EXIT_OK


def load_ground_truth(path, pred):
    """Reads ground truth as a label raster, or rasterises GeoJSON polygons on the prediction's grid."""
    if Path(path).suffix.lower() in GEOJSON_SUFFIXES:
        gt, dropped = rasterize_polygons(read_annotations(path), pred.geo, pred.shape)
        if dropped:
            logger.warning("%d ground-truth polygon(s) fall outside the prediction raster", dropped)
        return gt
    gt = InstanceMap.from_raster(read_raster(path))
    if gt.shape != pred.shape:
        raise DimensionError(f"Ground truth is {gt.shape[0]}x{gt.shape[1]}, "
                             f"prediction is {pred.shape[0]}x{pred.shape[1]}")
    return gt


def write_report_csv(report, path):
    columns = [f.name for f in dataclasses.fields(ImageEvaluation)]
    ensure_parent_dir(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=columns, lineterminator="\n")
            writer.writeheader()
            for image in report.per_image:
                writer.writerow({key: ("" if value is None else value) for key, value in image.to_dict().items()})
    except OSError as e:
        raise RasterIOError(f"Cannot write {path}: {e.strerror}") from e


def cmd_evaluate(args, threads):
    cfg = EvalConfig.from_json(args.config, {"iou_threshold": args.iou_threshold})
    metadata = RunMetadata("evaluate", config=cfg.to_dict())
    for path in (args.pred_labels, args.gt, args.config):
        if path:
            metadata.add_input(path)
    pred = InstanceMap.from_raster(read_raster(args.pred_labels))
    gt = load_ground_truth(args.gt, pred)
    with metadata.time_stage("evaluate"):
        report = evaluate_images([(Path(args.pred_labels).name, pred, gt)], cfg.iou_threshold,
                                 config=cfg.to_dict(), threads=threads)
    if args.shape_stats:
        with metadata.time_stage("shape_stats"):
            report.shape_stats = shape_statistics(vectorize(pred, pred.geo), cfg.histogram_bins)
    payload = report.to_dict()
    payload["metadata"] = metadata.to_dict()
    write_json(args.report, payload)
    if args.csv:
        write_report_csv(report, args.csv)
    print(f"evaluate: tp={report.tp} fp={report.fp} fn={report.fn} f1={report.f1:.4f} -> {args.report}")
    return EXIT_OK


def image_manifest(path):
    """
    Reads an image manifest: a list of raster paths, or {"images": [...]} whose entries are paths or
    {"name", "path"} objects. Relative paths resolve against the manifest's directory.

    Returns:
      list of tuple: (name, Path) pairs.
    """
    manifest = read_json(path)
    entries = manifest.get("images") if isinstance(manifest, dict) else manifest
    if not isinstance(entries, list):
        raise ValidationError(f"{path}: expected a list of images")
    base = Path(path).parent
    images = []
    for index, entry in enumerate(entries):
        if isinstance(entry, str):
            entry = {"path": entry}
        if not isinstance(entry, dict) or "path" not in entry:
            raise ValidationError(f"{path}: image {index} needs a path")
        image_path = base / entry["path"]
        images.append((entry.get("name", Path(entry["path"]).stem), image_path))
    return images


def cmd_split(args):
    overrides = {
        "bin_size": args.bin_size,
        "ratios": args.ratios,
        "seed": args.seed,
        "patch_size": args.patch_size,
        "overlap_fraction": args.overlap_fraction,
    }
    cfg = SplitConfig.from_json(args.config, overrides)
    metadata = RunMetadata("split", config=cfg.to_dict())
    metadata.add_input(args.annotations)
    metadata.add_input(args.images)
    annotations = read_annotations(args.annotations)
    images = []
    for name, image_path in image_manifest(args.images):
        images.append((name, read_raster(image_path)))
        metadata.add_input(image_path)
    with metadata.time_stage("split"):
        plan = plan_split(images, annotations, cfg)
    plan["metadata"] = metadata.to_dict()
    write_json(args.out, plan)
    fractions = ", ".join(f"{name} {plan['fractions'][name]:.3f}" for name in PARTITIONS)
    print(f"split: {len(plan['clusters'])} cluster(s), {len(plan['patches'])} patch(es); {fractions} -> {args.out}")
    return EXIT_OK


def cmd_synth(args, threads):
    grid = spec_grid_from_json(args.spec)
    metadata = RunMetadata("synth", config={"scenes": [spec.to_dict() for spec in grid]})
    metadata.add_input(args.spec)
    manifest = corpus(grid, args.out_dir, threads, metadata=metadata.to_dict(include_timings=False))
    print(f"synth: {len(manifest['scenes'])} scene(s) -> {args.out_dir}")
    return EXIT_OK


def cmd_render(args):
    labels = InstanceMap.from_raster(read_raster(args.labels))
    base = read_raster(args.base) if args.base else None
    render(labels, args.out, base, args.false_color)
    print(f"render: {labels.count} instance(s) -> {args.out}")
    return EXIT_OK


def cmd_ablate(args, threads):
    base = PipelineConfig.from_json(args.config)
    cfg = EvalConfig.from_dict({} if args.iou_threshold is None else {"iou_threshold": args.iou_threshold})
    metadata = RunMetadata("ablate", config={"pipeline": base.to_dict(), "evaluation": cfg.to_dict()})
    if args.config:
        metadata.add_input(args.config)
    if args.corpus:
        metadata.add_input(args.corpus)
        scenes = load_corpus(args.corpus)
    else:
        metadata.config["synthetic"] = {"scenes": args.scenes, "seed": args.seed, "density": args.density,
                                        "noise_sigma": args.noise_sigma, "blur_sigma": args.blur_sigma,
                                        "overlap_probability": args.overlap_probability}
        scenes = synthetic_scenes(args.scenes, seed=args.seed, density=args.density, noise_sigma=args.noise_sigma,
                                  blur_sigma=args.blur_sigma, overlap_probability=args.overlap_probability)
    with metadata.time_stage("ablation"):
        rows = run_ablation_table(scenes, base, cfg.iou_threshold, threads)
    payload = {"rows": rows}
    if args.significance:
        with metadata.time_stage("significance"):
            results = run_significance_table(scenes, base, cfg.iou_threshold, args.n_boot, args.seed, threads)
        payload["significance"] = {
            metric: {"p_value": result.p_value, "final_ci": list(result.ci_a), "raw_ci": list(result.ci_b)}
            for metric, result in results.items()
        }
    if args.report:
        payload["metadata"] = metadata.to_dict()
        write_json(args.report, payload)
    return EXIT_OK


THREADED_COMMANDS = {cmd_postprocess, cmd_evaluate, cmd_synth, cmd_ablate}


def dispatch(argv=None):
    """
    Parses argv and runs the chosen subcommand.

    Parameters:
      argv (list of str, optional): Arguments without the program name; defaults to sys.argv[1:].

    Returns:
      int: 0 on success, 1 on a validation error, 2 on an I/O error, 64 on a usage error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except _ParserExit as e:
        return e.status

    configure_logging(logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.handler in THREADED_COMMANDS:
            return args.handler(args, resolve_thread_count(args.threads))
        return args.handler(args)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except DeadwoodError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
