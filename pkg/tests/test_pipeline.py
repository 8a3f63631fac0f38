import dataclasses
import time

import numpy as np
import pytest

import oracles
from conftest import as_prediction
from Postprocess.markers import extract_markers
from Postprocess.pipeline import run_pipeline
from Postprocess.pipeline_config import PipelineConfig, gaussian_radius, stage_config, stage_flags
from Postprocess.tiling import plan_tiles, segment_tiled
from Postprocess.watershed import watershed_segment
from RasterCore.raster import MultiChannelRaster
from Synth.scene import SceneSpec, generate_scene
from config.constants import ABLATION_DENSITY, STACK_ROLES
from config.exceptions import DimensionError, ParameterError


@pytest.mark.parametrize("choice, count", [("raw", 1), ("filter", 1), ("watershed", 2), ("final", 2)])
def test_watershed_separates_overlapping_crowns(overlapping_crowns, choice, count):
    instance_map, instance_set = run_pipeline(as_prediction(overlapping_crowns), stage_config(choice))
    assert instance_map.count == count
    assert len(instance_set) == count


def test_separated_crowns_are_recovered_exactly(separate_crowns):
    instance_map, _ = run_pipeline(as_prediction(separate_crowns))
    assert instance_map.count == 3
    np.testing.assert_array_equal(oracles.canonical(instance_map.labels),
                                  oracles.canonical(separate_crowns.instance_map.labels))


def test_empty_prediction_gives_no_instances():
    pred = MultiChannelRaster(np.zeros((32, 32, 3)), channel_roles=STACK_ROLES)
    stats = {}
    instance_map, instance_set = run_pipeline(pred, stats=stats)
    assert instance_map.count == 0
    assert len(instance_set) == 0
    assert stats["markers"] == 0
    assert set(stats["timings"]) >= {"threshold", "watershed", "vectorize"}


def test_prediction_needs_three_channels():
    with pytest.raises(DimensionError):
        run_pipeline(MultiChannelRaster(np.zeros((4, 4, 2))))


def test_tiling_does_not_change_the_result(busy_scene):
    whole = PipelineConfig()
    tiled = PipelineConfig(tile_size=32, tile_halo=gaussian_radius(whole.smooth_sigma))
    reference, _ = run_pipeline(busy_scene.pred_stack, whole)
    assert reference.count > 1
    for cfg in (tiled, dataclasses.replace(tiled, tile_size=17), dataclasses.replace(tiled, tile_size=50)):
        labels, _ = run_pipeline(busy_scene.pred_stack, cfg)
        np.testing.assert_array_equal(labels.labels, reference.labels)


def test_worker_count_does_not_change_the_result(busy_scene):
    cfg = PipelineConfig(tile_size=40)
    single, _ = run_pipeline(busy_scene.pred_stack, cfg, threads=1)
    several, _ = run_pipeline(busy_scene.pred_stack, cfg, threads=4)
    np.testing.assert_array_equal(single.labels, several.labels)


def test_tiled_segmentation_matches_a_single_flood(busy_scene):
    pred = busy_scene.pred_stack
    cfg = PipelineConfig(tile_size=24, tile_halo=8)
    mask = pred.channel(0) >= cfg.seg_threshold
    labels, markers, _ = segment_tiled(mask, pred.channel(1), cfg, threads=3)
    direct = extract_markers(pred.channel(1), mask, cfg)
    expected, _ = watershed_segment(mask, direct, -direct.smoothed)
    assert markers.positions() == direct.positions()
    np.testing.assert_array_equal(labels, expected.labels)


def test_tiles_cover_the_raster_once():
    tiles = plan_tiles((50, 70), 32, 8)
    cover = np.zeros((50, 70), dtype=int)
    for tile in tiles:
        cover[tile.core] += 1
        assert tile.hrow0 == max(tile.row0 - 8, 0)
        assert tile.hcol1 == min(tile.col1 + 8, 70)
    assert np.all(cover == 1)
    assert len(tiles) == 6


def test_larger_min_area_never_adds_foreground(busy_scene):
    previous = None
    for min_area in (1, 16, 64, 200, 400):
        cfg = PipelineConfig(min_area=min_area, stages=("filtering",))
        instance_map, instance_set = run_pipeline(busy_scene.pred_stack, cfg)
        assert all(instance.area_px >= min_area for instance in instance_set)
        if previous is not None:
            assert not (instance_map.mask() & ~previous).any()
        previous = instance_map.mask()


def test_instances_carry_map_geometry(separate_crowns):
    _, instance_set = run_pipeline(as_prediction(separate_crowns))
    for instance in instance_set:
        assert instance.polygon.area == pytest.approx(instance.area_map)
        assert 0.0 < instance.compactness <= 1.0


@pytest.mark.parametrize("choice, flags", [
    ("raw", ()),
    ("filter", ("filtering", "hybrid_filtering")),
    ("watershed", ("watershed",)),
    ("final", ("filtering", "hybrid_filtering", "watershed")),
])
def test_stage_choices(choice, flags):
    assert stage_flags(choice) == flags
    cfg = stage_config(choice, PipelineConfig(min_area=5))
    assert cfg.stages == flags
    assert cfg.min_area == 5


def test_unknown_stage_choice():
    with pytest.raises(ParameterError):
        stage_flags("everything")


@pytest.mark.parametrize("values", [
    {"seg_threshold": 1.0},
    {"min_area": 0},
    {"min_area": 2.5},
    {"boundary_threshold": 0.0},
    {"smooth_sigma": 0.0},
    {"peak_min_distance": 0.5},
    {"peak_min_intensity": 1.0},
    {"peak_metric": "manhattan"},
    {"connectivity": 6},
    {"stages": ("watershed", "smoothing")},
    {"smooth_sigma": 5.0, "tile_halo": 16},
    {"vectorize_mode": "hull"},
])
def test_invalid_pipeline_configs(values):
    with pytest.raises(ParameterError):
        PipelineConfig(**values)


def test_pipeline_config_round_trips_through_json(tmp_path):
    cfg = PipelineConfig(min_area=9, stages=("watershed",), peak_metric="chebyshev")
    assert PipelineConfig.from_dict(cfg.to_dict()) == cfg
    path = tmp_path / "pipeline.json"
    path.write_text('{"min_area": 9, "stages": ["watershed"]}')
    loaded = PipelineConfig.from_json(path, {"peak_metric": "chebyshev", "seg_threshold": None})
    assert loaded == cfg


@pytest.mark.slow
def test_large_raster_is_fast_and_thread_independent():
    spec = SceneSpec(extent=(4096, 4096), density=ABLATION_DENSITY, overlap_probability=0.3, noise_sigma=0.1,
                     blur_sigma=1.5, seed=11)
    pred = generate_scene(spec).pred_stack
    started = time.perf_counter()
    single, single_instances = run_pipeline(pred, threads=1)
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0
    assert single.count > 100

    several, several_instances = run_pipeline(pred, threads=4)
    np.testing.assert_array_equal(several.labels, single.labels)
    assert [i.centroid_px for i in several_instances] == [i.centroid_px for i in single_instances]
    assert [i.polygon.wkb for i in several_instances] == [i.polygon.wkb for i in single_instances]
