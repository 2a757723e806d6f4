"""Synthetic occlusion injection: delete detection runs from matched tracklets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigurationError, InputError
from .kitti_io import SequenceDataset, ground_position

OCCLUSION_KINDS = ("mid", "late")

_NO_MATCH = 1e9


@dataclass(frozen=True)
class OcclusionSpec:
    """Where and how long detections disappear for each eligible object."""

    kind: str
    start_after: int       # minimum observations before an occlusion may begin
    length: int            # consecutive detections removed
    match_threshold: float = 2.0

    def __post_init__(self):
        if self.kind not in OCCLUSION_KINDS:
            raise ConfigurationError(
                f"config key 'kind': must be one of {OCCLUSION_KINDS}, got {self.kind!r}")
        if self.start_after < 1:
            raise ConfigurationError(
                f"config key 'start_after': must be >= 1, got {self.start_after}")
        if self.length < 1:
            raise ConfigurationError(
                f"config key 'length': must be >= 1, got {self.length}")
        if self.match_threshold <= 0:
            raise ConfigurationError(
                f"config key 'match_threshold': must be positive, got {self.match_threshold}")


@dataclass
class ObjectTracklet:
    """One ground-truth object's matched detections as (frame, index) pairs."""

    track_id: int
    observations: list


def match_detections_to_gt(dataset: SequenceDataset, gt_frames,
                           threshold: float = 2.0):
    """Associate detections with ground truth per frame.

    Returns (tracklets keyed by ground-truth id, unmatched (frame, index) pairs).
    """
    if isinstance(gt_frames, SequenceDataset):
        gt_frames = gt_frames.ground_truth
    if gt_frames is None:
        raise InputError("ground truth is required to build tracklets")
    if len(dataset.detections) != len(gt_frames):
        raise InputError(
            f"frame ranges differ: detections cover {len(dataset.detections)} "
            f"frames, ground truth covers {len(gt_frames)}")
    observations: dict = {}
    unmatched = []
    for frame, det_records in enumerate(dataset.detections):
        gt_records = gt_frames[frame]
        if not det_records:
            continue
        if not gt_records:
            unmatched.extend((frame, j) for j in range(len(det_records)))
            continue
        det_pos = np.array([ground_position(r) for r in det_records])
        gt_pos = np.array([ground_position(r) for r in gt_records])
        dist = np.linalg.norm(gt_pos[:, None, :] - det_pos[None, :, :], axis=2)
        cost = np.where(dist <= threshold, dist, _NO_MATCH)
        rows, cols = linear_sum_assignment(cost)
        taken = set()
        for r, c in zip(rows, cols):
            if dist[r, c] <= threshold:
                gt_id = gt_records[r].track_id
                observations.setdefault(gt_id, []).append((frame, int(c)))
                taken.add(int(c))
        unmatched.extend((frame, j) for j in range(len(det_records))
                         if j not in taken)
    tracklets = [ObjectTracklet(track_id=tid, observations=obs)
                 for tid, obs in sorted(observations.items())]
    return tracklets, unmatched


def occlusion_cut(n_observations: int, spec: OcclusionSpec):
    """Ordinal range [start, stop) of detections to delete; None if ineligible."""
    if n_observations < spec.start_after + spec.length:
        return None
    if spec.kind == "late":
        start = n_observations - spec.length
    else:
        start = max(spec.start_after, (n_observations - spec.length) // 2)
    return start, start + spec.length


def simulate_occlusion(dataset: SequenceDataset, tracklets, spec: OcclusionSpec):
    """Remove each eligible tracklet's occluded run; everything else unchanged.

    Returns (occluded dataset, {track_id: [occluded frames]}).
    """
    deleted = set()
    occluded_frames: dict = {}
    for tracklet in tracklets:
        cut = occlusion_cut(len(tracklet.observations), spec)
        if cut is None:
            continue
        start, stop = cut
        chunk = tracklet.observations[start:stop]
        deleted.update(chunk)
        occluded_frames[tracklet.track_id] = [frame for frame, _ in chunk]
    frames = [[record for j, record in enumerate(frame_records)
               if (frame, j) not in deleted]
              for frame, frame_records in enumerate(dataset.detections)]
    out = SequenceDataset(sequence_id=dataset.sequence_id, dt=dataset.dt,
                          detections=frames,
                          ground_truth=dataset.ground_truth)
    return out, occluded_frames


def occlude_dataset(dataset: SequenceDataset, gt_frames, spec: OcclusionSpec):
    """Match then simulate in one call; see the two steps for details."""
    tracklets, _ = match_detections_to_gt(dataset, gt_frames,
                                          spec.match_threshold)
    return simulate_occlusion(dataset, tracklets, spec)
