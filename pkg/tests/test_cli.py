import csv
import io
import json

import pytest
from PIL import Image

from Cli.commands import dispatch
from conftest import disk_annotation
from RasterCore.annotations import write_annotations
from RasterCore.raster import InstanceMap
from RasterCore.raster_io import read_raster
from config.constants import STACK_ROLES, VERSION
from config.utils import file_digest, read_json


def run(capsys, *argv):
    status = dispatch([str(arg) for arg in argv])
    out, err = capsys.readouterr()
    return status, out, err


@pytest.fixture
def annotation_file(tmp_path):
    path = tmp_path / "crowns.geojson"
    write_annotations([disk_annotation(20.5, 32.5, 8.0), disk_annotation(32.5, 32.5, 8.0)], path)
    return path


@pytest.fixture
def targets_file(tmp_path, annotation_file, capsys):
    path = tmp_path / "targets.raster"
    status, _, _ = run(capsys, "targets", "--annotations", annotation_file, "--shape", "64,64",
                       "--origin", "0,64", "--pixel-size", 1, "--out", path)
    assert status == 0
    return path


@pytest.fixture
def labels_file(tmp_path, targets_file, capsys):
    path = tmp_path / "labels.raster"
    status, _, _ = run(capsys, "postprocess", "--pred", targets_file, "--out-labels", path)
    assert status == 0
    return path


def test_help_and_version(capsys):
    assert run(capsys, "--help")[0] == 0
    status, out, _ = run(capsys, "--version")
    assert status == 0
    assert VERSION in out
    status, out, _ = run(capsys, "postprocess", "--help")
    assert status == 0
    assert "--out-labels" in out


@pytest.mark.parametrize("argv", [
    [],
    ["prune"],
    ["postprocess", "--pred", "p.raster"],
    ["postprocess", "--pred", "p.raster", "--out-labels", "l.raster", "--min-area", "many"],
    ["postprocess", "--pred", "p.raster", "--out-labels", "l.raster", "--stages", "everything"],
    ["targets", "--annotations", "a.geojson", "--shape", "64", "--out", "t.raster"],
])
def test_usage_errors(capsys, argv):
    status, _, err = run(capsys, *argv)
    assert status == 64
    assert err


def test_missing_input_is_an_io_error(tmp_path, capsys):
    missing = tmp_path / "absent.raster"
    status, _, err = run(capsys, "postprocess", "--pred", missing, "--out-labels", tmp_path / "l.raster")
    assert status == 2
    assert "absent.raster" in err


def test_invalid_configuration_is_a_validation_error(tmp_path, targets_file, capsys):
    status, _, err = run(capsys, "postprocess", "--pred", targets_file, "--out-labels", tmp_path / "l.raster",
                         "--min-area", 0)
    assert status == 1
    assert "min_area" in err
    config = tmp_path / "pipeline.json"
    config.write_text('{"minimum_area": 3}')
    status, _, err = run(capsys, "postprocess", "--pred", targets_file, "--out-labels", tmp_path / "l.raster",
                         "--config", config)
    assert status == 1
    assert "minimum_area" in err


def test_targets_command(tmp_path, annotation_file, capsys):
    out = tmp_path / "targets.raster"
    status, stdout, _ = run(capsys, "targets", "--annotations", annotation_file, "--shape", "64,64",
                            "--origin", "0,64", "--pixel-size", 1, "--out", out)
    assert status == 0
    assert stdout.strip() == f"targets: 2 instance(s), 0 dropped -> {out}"
    raster = read_raster(out)
    assert raster.channels == 3
    assert list(raster.channel_roles) == STACK_ROLES
    assert raster.metadata["command"] == "targets"
    assert "timings" not in raster.metadata
    assert raster.metadata["inputs"] == {str(annotation_file): file_digest(annotation_file)}

    again = tmp_path / "again.raster"
    assert run(capsys, "targets", "--annotations", annotation_file, "--reference", out, "--out", again)[0] == 0
    assert read_raster(again) == raster


def test_postprocess_command(tmp_path, targets_file, capsys):
    labels = tmp_path / "labels.raster"
    geojson = tmp_path / "instances.geojson"
    status, stdout, _ = run(capsys, "postprocess", "--pred", targets_file, "--out-labels", labels,
                            "--out-geojson", geojson, "--crs-epsg", 32632, "--threads", 2)
    assert status == 0
    assert stdout.strip() == f"postprocess: 2 instance(s), 2 marker(s), 0 discarded -> {labels}"
    assert InstanceMap.from_raster(read_raster(labels)).count == 2
    collection = read_json(geojson)
    assert len(collection["features"]) == 2
    assert collection["crs_epsg"] == 32632
    assert "watershed" in collection["metadata"]["timings"]


def test_postprocess_stage_choice(tmp_path, targets_file, capsys):
    status, stdout, _ = run(capsys, "postprocess", "--pred", targets_file, "--out-labels", tmp_path / "raw.raster",
                            "--stages", "raw")
    assert status == 0
    assert stdout.startswith("postprocess: 1 instance(s), 0 marker(s)")


def test_postprocess_outputs_are_reproducible(tmp_path, targets_file, capsys):
    digests, collections = [], []
    for name in ("a", "b"):
        labels = tmp_path / f"{name}.raster"
        geojson = tmp_path / f"{name}.geojson"
        assert run(capsys, "postprocess", "--pred", targets_file, "--out-labels", labels,
                   "--out-geojson", geojson)[0] == 0
        digests.append(file_digest(labels))
        collection = read_json(geojson)
        del collection["metadata"]["timings"]
        collections.append(collection)
    assert digests[0] == digests[1]
    assert collections[0] == collections[1]


def test_evaluate_against_polygons_and_labels(tmp_path, labels_file, annotation_file, capsys):
    for gt in (annotation_file, labels_file):
        report = tmp_path / "report.json"
        table = tmp_path / "report.csv"
        status, stdout, _ = run(capsys, "evaluate", "--pred-labels", labels_file, "--gt", gt,
                                "--report", report, "--csv", table, "--shape-stats")
        assert status == 0
        assert stdout.startswith("evaluate: tp=2 fp=0 fn=0 f1=1.0000")
        payload = read_json(report)
        # Rasterised polygons give the overlap to the later crown; the watershed splits it.
        assert payload["tree_iou"] == (pytest.approx(1.0) if gt == labels_file else pytest.approx(0.92, abs=0.05))
        assert payload["config"]["iou_threshold"] == 0.5
        assert sum(payload["shape_stats"]["compactness"]["counts"]) == 2
        assert str(gt) in payload["metadata"]["inputs"]
        rows = list(csv.DictReader(table.open()))
        assert rows[0]["name"] == "labels.raster"
        assert rows[0]["tp"] == "2"


def test_evaluate_rejects_a_mismatched_grid(tmp_path, labels_file, capsys):
    small = tmp_path / "small.raster"
    annotations = tmp_path / "one.geojson"
    write_annotations([disk_annotation(8.5, 8.5, 4.0)], annotations)
    run(capsys, "targets", "--annotations", annotations, "--shape", "16,16", "--origin", "0,16",
        "--pixel-size", 1, "--out", tmp_path / "small_targets.raster")
    run(capsys, "postprocess", "--pred", tmp_path / "small_targets.raster", "--out-labels", small)
    status, _, err = run(capsys, "evaluate", "--pred-labels", labels_file, "--gt", small,
                         "--report", tmp_path / "r.json")
    assert status == 1
    assert "16x16" in err


def test_split_command(tmp_path, targets_file, annotation_file, capsys):
    images = tmp_path / "images.json"
    images.write_text(json.dumps({"images": [{"name": "plot", "path": targets_file.name}]}))
    out = tmp_path / "split.json"
    status, stdout, _ = run(capsys, "split", "--annotations", annotation_file, "--images", images,
                            "--patch-size", 32, "--overlap", 0.5, "--out", out)
    assert status == 0
    assert stdout.startswith("split: 1 cluster(s), 9 patch(es)")
    plan = read_json(out)
    assert {row["partition"] for row in plan["patches"]} == {"train"}
    assert plan["warning"] == "single cluster: everything assigned to train"
    assert plan["config"]["patch_size"] == 32
    assert str(targets_file) in plan["metadata"]["inputs"]


def test_synth_command_is_reproducible(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"scenes": 2, "extent": [96, 96], "density": 120.0,
                                "crown_radius_range": [4.0, 7.0], "noise_sigma": 0.05, "seed": 3}))
    manifests = []
    for name in ("a", "b"):
        status, stdout, _ = run(capsys, "synth", "--spec", spec, "--out-dir", tmp_path / name)
        assert status == 0
        assert stdout.startswith("synth: 2 scene(s)")
        manifests.append(read_json(tmp_path / name / "manifest.json"))
    assert [s["digests"] for s in manifests[0]["scenes"]] == [s["digests"] for s in manifests[1]["scenes"]]
    assert [s["spec"]["seed"] for s in manifests[0]["scenes"]] == [3, 4]
    assert manifests[0]["metadata"]["command"] == "synth"


def test_render_command(tmp_path, labels_file, targets_file, capsys):
    out = tmp_path / "overlay.png"
    status, stdout, _ = run(capsys, "render", "--labels", labels_file, "--base", targets_file, "--out", out)
    assert status == 0
    assert stdout.strip() == f"render: 2 instance(s) -> {out}"
    with Image.open(out) as image:
        assert image.size == (64, 64)
    status, _, err = run(capsys, "render", "--labels", labels_file, "--base", targets_file, "--false-color",
                         "--out", out)
    assert status == 1
    assert "4 bands" in err


def test_loss_eval_command(tmp_path, capsys):
    annotations = tmp_path / "one.geojson"
    write_annotations([disk_annotation(10.5, 10.5, 5.0)], annotations)
    targets = tmp_path / "small.raster"
    assert run(capsys, "targets", "--annotations", annotations, "--shape", "20,20", "--origin", "0,20",
               "--pixel-size", 1, "--out", targets)[0] == 0
    status, stdout, _ = run(capsys, "loss-eval", "--pred", targets, "--targets", targets, "--check-gradient")
    assert status == 0
    rows = list(csv.reader(io.StringIO(stdout)))
    assert rows[0] == ["component", "value"]
    components = dict(row for row in rows[1:10])
    assert set(components) == {"bce", "focal", "dice", "centroid", "sdt", "boundary", "seg", "hybrid", "total"}
    assert float(components["centroid"]) == 0.0
    assert rows[11] == ["loss", "relative_gradient_error"]
    assert [row[0] for row in rows[12:]] == ["seg", "centroid", "hybrid", "total"]
