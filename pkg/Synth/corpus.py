import dataclasses
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from RasterCore.annotations import read_annotations, write_annotations
from RasterCore.raster import InstanceMap
from RasterCore.raster_io import read_raster, write_raster
from Synth.scene import SceneSpec, generate_scene
from Targets.target_stack import check_target_stack
from config.constants import VERSION
from config.exceptions import ValidationError
from config.logger import get_logger
from config.utils import file_digest, read_json, write_json

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"
FILE_KINDS = ("annotations", "targets", "prediction", "labels")


def scene_file_names(index):
    stem = f"scene_{index:04d}"
    return {
        "annotations": f"{stem}_annotations.geojson",
        "targets": f"{stem}_targets.raster",
        "prediction": f"{stem}_pred.raster",
        "labels": f"{stem}_labels.raster",
    }


def write_scene(scene, out_dir, index):
    """Writes one scene's files and returns its manifest entry."""
    violations = check_target_stack(scene.target_stack)
    if violations:
        raise ValidationError(f"Scene {index} targets are invalid: {'; '.join(violations)}")
    out_dir = Path(out_dir)
    names = scene_file_names(index)
    paths = {kind: out_dir / name for kind, name in names.items()}
    write_annotations(scene.annotations, paths["annotations"])
    write_raster(scene.target_stack.to_raster(metadata={"scene": scene.spec.to_dict()}), paths["targets"])
    write_raster(scene.pred_stack, paths["prediction"])
    write_raster(scene.target_stack.instance_map.to_raster(), paths["labels"])
    return {
        "index": index,
        "spec": scene.spec.to_dict(),
        "crowns": len(scene.annotations),
        "files": names,
        "digests": {kind: file_digest(paths[kind]) for kind in FILE_KINDS},
    }


def spec_grid_from_json(path):
    """
    Reads the scene grid of a corpus.

    The file holds either a list of SceneSpec objects, or one SceneSpec object with an optional
    "scenes" count that repeats it with consecutive seeds.

    Returns:
      list of SceneSpec: One spec per scene.
    """
    values = read_json(path)
    if isinstance(values, list):
        return [SceneSpec.from_dict(entry) for entry in values]
    if not isinstance(values, dict):
        raise ValidationError(f"{path}: expected a SceneSpec object or a list of them")
    values = dict(values)
    count = values.pop("scenes", 1)
    if isinstance(count, bool) or not isinstance(count, int) or count < 0:
        raise ValidationError(f"{path}: 'scenes' must be a non-negative integer, got {count!r}")
    base = SceneSpec.from_dict(values)
    return [dataclasses.replace(base, seed=base.seed + index) for index in range(count)]


def corpus(spec_grid, out_dir, threads=1, metadata=None):
    """
    Generates and writes a corpus of synthetic scenes with a manifest.

    Parameters:
      spec_grid (list of SceneSpec): One spec per scene.
      out_dir (str | Path): Output directory, created if missing.
      threads (int): Worker cap; scenes are written in grid order.
      metadata (dict, optional): Run metadata stored in the manifest.

    Returns:
      dict: The manifest, also written to out_dir/manifest.json.
    """
    out_dir = Path(out_dir)
    with ThreadPoolExecutor(max_workers=threads) as executor:
        scenes = list(executor.map(generate_scene, spec_grid))
    entries = [write_scene(scene, out_dir, index) for index, scene in enumerate(scenes)]
    manifest = {"version": VERSION, "scenes": entries}
    if metadata:
        manifest["metadata"] = metadata
    write_json(out_dir / MANIFEST_NAME, manifest)
    logger.info("wrote %d scene(s) to %s", len(entries), out_dir)
    return manifest


def regenerate(manifest_path, out_dir, threads=1):
    """Rebuilds a corpus from the specs recorded in an existing manifest."""
    manifest = read_json(manifest_path)
    specs = [SceneSpec.from_dict(entry["spec"]) for entry in manifest.get("scenes", [])]
    return corpus(specs, out_dir, threads)


def load_corpus(manifest_path):
    """
    Reads the prediction rasters and ground-truth labels listed in a manifest.

    Returns:
      list of tuple: (name, prediction MultiChannelRaster, ground-truth InstanceMap, annotations).
    """
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    scenes = []
    for entry in read_json(manifest_path).get("scenes", []):
        files = entry["files"]
        pred = read_raster(base / files["prediction"])
        labels = InstanceMap.from_raster(read_raster(base / files["labels"]))
        annotations = read_annotations(base / files["annotations"])
        scenes.append((files["prediction"], pred, labels, annotations))
    return scenes
