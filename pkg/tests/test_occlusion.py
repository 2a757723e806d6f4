"""Occlusion simulation: cut placement, gt matching, detection deletion."""
import numpy as np
import pytest

from dynatrack import kitti_io as kio
from dynatrack.errors import ConfigurationError, InputError
from dynatrack.occlusion import (ObjectTracklet, OcclusionSpec,
                                 match_detections_to_gt, occlude_dataset,
                                 occlusion_cut, simulate_occlusion)
from dynatrack.synth import ObjectSpec, RegimeSegment, ScenarioSpec, generate


def _scenario(n_frames=60, noise=0.05, seed=3):
    objects = [
        ObjectSpec(initial_position=(0.0, 10.0),
                   segments=[RegimeSegment("cv", n_frames, (1.0, 0.0))]),
        ObjectSpec(initial_position=(0.0, 40.0),
                   segments=[RegimeSegment("stationary", n_frames)]),
    ]
    return generate(ScenarioSpec(objects=objects, noise_sigma=noise, seed=seed))


def test_spec_validation():
    with pytest.raises(ConfigurationError, match="'kind'"):
        OcclusionSpec(kind="early", start_after=1, length=1)
    with pytest.raises(ConfigurationError, match="'start_after'"):
        OcclusionSpec(kind="mid", start_after=0, length=1)
    with pytest.raises(ConfigurationError, match="'length'"):
        OcclusionSpec(kind="mid", start_after=1, length=0)
    with pytest.raises(ConfigurationError, match="'match_threshold'"):
        OcclusionSpec(kind="mid", start_after=1, length=1, match_threshold=0.0)


def test_cut_requires_enough_observations():
    spec = OcclusionSpec(kind="mid", start_after=5, length=3)
    assert occlusion_cut(7, spec) is None
    assert occlusion_cut(8, spec) == (5, 8)


def test_cut_late_takes_the_tail():
    spec = OcclusionSpec(kind="late", start_after=5, length=3)
    assert occlusion_cut(10, spec) == (7, 10)


def test_cut_mid_centers_after_warmup():
    spec = OcclusionSpec(kind="mid", start_after=5, length=10)
    assert occlusion_cut(30, spec) == (10, 20)
    spec_long_warmup = OcclusionSpec(kind="mid", start_after=12, length=10)
    assert occlusion_cut(30, spec_long_warmup) == (12, 22)


def test_match_builds_one_tracklet_per_object():
    gt, dets = _scenario()
    tracklets, unmatched = match_detections_to_gt(dets, gt.ground_truth)
    assert [t.track_id for t in tracklets] == [1, 2]
    assert all(len(t.observations) == 60 for t in tracklets)
    assert unmatched == []
    frames = [frame for frame, _ in tracklets[0].observations]
    assert frames == sorted(frames)


def test_match_reports_spurious_detections():
    gt, dets = _scenario()
    spurious = kio.DetectionRecord(
        frame=2, obj_type="Car", truncated=0.0, occluded=0, alpha=0.0,
        bbox2d=(0.0, 0.0, 1.0, 1.0), dims=(1.5, 1.8, 4.2),
        location=(500.0, 1.5, 500.0), rotation_y=0.0, score=0.9)
    dets.detections[2].append(spurious)
    _, unmatched = match_detections_to_gt(dets, gt.ground_truth)
    assert unmatched == [(2, len(dets.detections[2]) - 1)]


def test_match_accepts_dataset_and_checks_alignment():
    gt, dets = _scenario()
    tracklets, _ = match_detections_to_gt(dets, gt)
    assert len(tracklets) == 2
    with pytest.raises(InputError, match="frame ranges differ"):
        match_detections_to_gt(dets, gt.ground_truth[:-1])
    with pytest.raises(InputError, match="ground truth is required"):
        match_detections_to_gt(dets, None)


def test_simulate_removes_only_the_cut():
    gt, dets = _scenario()
    spec = OcclusionSpec(kind="mid", start_after=10, length=20)
    tracklets, _ = match_detections_to_gt(dets, gt.ground_truth)
    occluded, dropped = simulate_occlusion(dets, tracklets, spec)
    assert sorted(dropped) == [1, 2]
    assert dropped[1] == list(range(20, 40))
    counts = [len(f) for f in occluded.detections]
    assert all(c == 2 for c in counts[:20])
    assert all(c == 0 for c in counts[20:40])
    assert all(c == 2 for c in counts[40:])
    # the input dataset is left untouched
    assert all(len(f) == 2 for f in dets.detections)


def test_simulate_skips_short_tracklets():
    gt, dets = _scenario()
    spec = OcclusionSpec(kind="mid", start_after=50, length=20)
    tracklets, _ = match_detections_to_gt(dets, gt.ground_truth)
    occluded, dropped = simulate_occlusion(dets, tracklets, spec)
    assert dropped == {}
    assert [len(f) for f in occluded.detections] == [2] * 60


def test_surviving_lines_are_byte_identical(tmp_path):
    gt, dets = _scenario()
    det_path = tmp_path / "det.txt"
    kio.write_detections(dets.detections, det_path)
    parsed = kio.parse_detections(det_path)
    spec = OcclusionSpec(kind="late", start_after=5, length=10)
    occluded, dropped = occlude_dataset(parsed, gt.ground_truth, spec)
    out_path = tmp_path / "occ.txt"
    kio.write_detections(occluded.detections, out_path)
    original = det_path.read_text().splitlines()
    survivors = set(out_path.read_text().splitlines())
    assert survivors <= set(original)
    assert len(original) - len(survivors) == sum(len(v) for v in dropped.values())
    assert dropped[1] == list(range(50, 60))


def test_occlude_dataset_end_to_end():
    gt, dets = _scenario()
    spec = OcclusionSpec(kind="mid", start_after=10, length=20)
    occluded, dropped = occlude_dataset(dets, gt.ground_truth, spec)
    assert set(dropped) == {1, 2}
    total_before = sum(len(f) for f in dets.detections)
    total_after = sum(len(f) for f in occluded.detections)
    assert total_before - total_after == 40


def test_tracklet_observation_indices_refer_to_frame_lists():
    gt, dets = _scenario()
    tracklets, _ = match_detections_to_gt(dets, gt.ground_truth)
    for tracklet in tracklets:
        for frame, j in tracklet.observations[:5]:
            rec = dets.detections[frame][j]
            gt_rec = next(r for r in gt.ground_truth[frame]
                          if r.track_id == tracklet.track_id)
            det_pos = kio.ground_position(rec)
            gt_pos = kio.ground_position(gt_rec)
            assert np.linalg.norm(det_pos - gt_pos) <= 2.0
