"""Tracking quality metrics: CLEAR-MOT counters, identity F1, localization, latency."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InputError, UndefinedMetricError
from .kitti_io import SequenceDataset, id_position_frames
from .tracker import MultiObjectTracker

_NO_MATCH = 1e9


@dataclass
class MotSummary:
    mota: float
    false_positives: int
    false_negatives: int
    id_switches: int
    gt_total: int
    matches: int
    threshold: float


@dataclass
class IdSummary:
    idf1: float
    idp: float
    idr: float
    idtp: int
    idfp: int
    idfn: int
    threshold: float


@dataclass
class PhaseStats:
    count: int
    mean: float
    std: float


@dataclass
class TrackError:
    track_id: int
    observed: PhaseStats
    occluded: PhaseStats


@dataclass
class LatencyReport:
    baseline_ms: list
    dynamic_ms: list
    mean_baseline_ms: float
    mean_dynamic_ms: float
    mean_delta_ms: float
    warmup: int


def _as_frames(obj):
    """Normalize input to per-frame [(id, position array)] lists."""
    if isinstance(obj, SequenceDataset):
        if obj.ground_truth is None:
            raise InputError("dataset carries no ground-truth frames")
        return id_position_frames(obj.ground_truth)
    frames = []
    for frame_items in obj:
        items = []
        for item in frame_items:
            if isinstance(item, tuple):
                items.append((item[0], np.asarray(item[1], dtype=float)))
            elif hasattr(item, "track_id") and hasattr(item, "location"):
                x, _, z = item.location
                items.append((item.track_id, np.array([x, z])))
            else:  # tracker snapshots
                items.append((item.track_id, np.asarray(item.position, dtype=float)))
        frames.append(items)
    return frames


def _pad(a, b):
    n = max(len(a), len(b))
    return a + [[]] * (n - len(a)), b + [[]] * (n - len(b))


def clearmot(gt, hyp, threshold: float = 2.0) -> MotSummary:
    """CLEAR-MOT on center distance.

    Correspondences from the previous frame are kept while still within the
    threshold; the remainder is matched by min-distance assignment. A switch
    is counted when a ground-truth object's matched id changes relative to
    its last known correspondence.
    """
    gt_frames, hyp_frames = _pad(_as_frames(gt), _as_frames(hyp))
    fp = fn = idsw = gt_total = matches_total = 0
    active: dict = {}      # gt id -> hyp id carried from the previous frame
    last_match: dict = {}  # gt id -> most recent matched hyp id
    for gts, hyps in zip(gt_frames, hyp_frames):
        gt_total += len(gts)
        hyp_pos = {hid: pos for hid, pos in hyps}
        matched: dict = {}
        used = set()
        for gid, gpos in gts:
            hid = active.get(gid)
            if hid is not None and hid in hyp_pos and hid not in used:
                if float(np.linalg.norm(gpos - hyp_pos[hid])) <= threshold:
                    matched[gid] = hid
                    used.add(hid)
        rest_gt = [(gid, gpos) for gid, gpos in gts if gid not in matched]
        rest_hyp = [(hid, pos) for hid, pos in hyps if hid not in used]
        if rest_gt and rest_hyp:
            dist = np.array([[float(np.linalg.norm(gpos - hpos))
                              for _, hpos in rest_hyp]
                             for _, gpos in rest_gt])
            cost = np.where(dist <= threshold, dist, _NO_MATCH)
            rows, cols = linear_sum_assignment(cost)
            for r, c in zip(rows, cols):
                if dist[r, c] <= threshold:
                    matched[rest_gt[r][0]] = rest_hyp[c][0]
        for gid, hid in matched.items():
            if gid in last_match and last_match[gid] != hid:
                idsw += 1
            last_match[gid] = hid
        fn += len(gts) - len(matched)
        fp += len(hyps) - len(matched)
        matches_total += len(matched)
        active = matched
    if gt_total == 0:
        raise UndefinedMetricError("MOTA undefined: ground truth holds no objects")
    mota = 1.0 - (fn + fp + idsw) / gt_total
    return MotSummary(mota=mota, false_positives=fp, false_negatives=fn,
                      id_switches=idsw, gt_total=gt_total,
                      matches=matches_total, threshold=threshold)


def idf1(gt, hyp, threshold: float = 2.0) -> IdSummary:
    """Identity scores from the globally optimal one-to-one id pairing."""
    gt_frames, hyp_frames = _pad(_as_frames(gt), _as_frames(hyp))
    gt_count: dict = {}
    hyp_count: dict = {}
    overlap: dict = {}
    for gts, hyps in zip(gt_frames, hyp_frames):
        for gid, _ in gts:
            gt_count[gid] = gt_count.get(gid, 0) + 1
        for hid, _ in hyps:
            hyp_count[hid] = hyp_count.get(hid, 0) + 1
        for gid, gpos in gts:
            for hid, hpos in hyps:
                if float(np.linalg.norm(gpos - hpos)) <= threshold:
                    overlap[(gid, hid)] = overlap.get((gid, hid), 0) + 1
    total_gt = sum(gt_count.values())
    total_hyp = sum(hyp_count.values())
    idtp = 0
    if overlap:
        gt_ids = sorted(gt_count)
        hyp_ids = sorted(hyp_count)
        gain = np.zeros((len(gt_ids), len(hyp_ids)))
        for i, gid in enumerate(gt_ids):
            for j, hid in enumerate(hyp_ids):
                gain[i, j] = overlap.get((gid, hid), 0)
        rows, cols = linear_sum_assignment(-gain)
        idtp = int(gain[rows, cols].sum())
    idfn = total_gt - idtp
    idfp = total_hyp - idtp
    denom = 2 * idtp + idfp + idfn
    score = (2 * idtp / denom) if denom else 0.0
    idp = idtp / total_hyp if total_hyp else 0.0
    idr = idtp / total_gt if total_gt else 0.0
    return IdSummary(idf1=score, idp=idp, idr=idr, idtp=idtp, idfp=idfp,
                     idfn=idfn, threshold=threshold)


def _phase_stats(errors) -> PhaseStats:
    n = len(errors)
    if n == 0:
        return PhaseStats(count=0, mean=math.nan, std=math.nan)
    arr = np.asarray(errors, dtype=float)
    std = float(arr.std(ddof=1)) if n > 1 else 0.0
    return PhaseStats(count=n, mean=float(arr.mean()), std=std)


def localization_error(gt_trajectories: dict, est_trajectories: dict,
                       occluded_frames: dict | None = None,
                       id_map: dict | None = None):
    """Per-track position error statistics split by occlusion phase.

    Trajectories are {track_id: {frame: position}}. `id_map` maps estimate
    ids to ground-truth ids (identity when omitted). `occluded_frames` lists
    the frames during which the ground-truth object was occluded.
    """
    occluded_frames = occluded_frames or {}
    results = []
    for est_id in sorted(est_trajectories):
        gt_id = id_map.get(est_id, est_id) if id_map else est_id
        if gt_id not in gt_trajectories:
            continue
        gt_traj = gt_trajectories[gt_id]
        est_traj = est_trajectories[est_id]
        occ = set(occluded_frames.get(gt_id, ()))
        observed, hidden = [], []
        for frame in sorted(est_traj):
            if frame not in gt_traj:
                continue
            err = float(np.linalg.norm(np.asarray(est_traj[frame], dtype=float)
                                       - np.asarray(gt_traj[frame], dtype=float)))
            (hidden if frame in occ else observed).append(err)
        results.append(TrackError(track_id=gt_id,
                                  observed=_phase_stats(observed),
                                  occluded=_phase_stats(hidden)))
    return results


def measure_latency(frames, baseline_cfg, dynamic_cfg,
                    warmup: int = 10) -> LatencyReport:
    """Per-frame wall time of both configurations on identical input."""
    def _run(cfg):
        tracker = MultiObjectTracker(cfg)
        times = []
        for frame, detections in enumerate(frames):
            start = time.perf_counter()
            tracker.step(frame, detections)
            times.append((time.perf_counter() - start) * 1e3)
        return times

    baseline_ms = _run(baseline_cfg)
    dynamic_ms = _run(dynamic_cfg)
    steady_b = baseline_ms[warmup:]
    steady_d = dynamic_ms[warmup:]
    mean_b = float(np.mean(steady_b)) if steady_b else math.nan
    mean_d = float(np.mean(steady_d)) if steady_d else math.nan
    delta = mean_d - mean_b if steady_b and steady_d else math.nan
    return LatencyReport(baseline_ms=baseline_ms, dynamic_ms=dynamic_ms,
                         mean_baseline_ms=mean_b, mean_dynamic_ms=mean_d,
                         mean_delta_ms=delta, warmup=warmup)
