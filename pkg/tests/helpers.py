"""Shared fixtures: measurement factories, reference metric implementations."""
import itertools

import numpy as np

from dynatrack.config import RunConfig
from dynatrack.filtering import Measurement
from dynatrack.tracker import MultiObjectTracker


def measurement(x, y, frame=0, elevation=1.5, yaw=0.0, dims=(1.5, 1.8, 4.2),
                score=0.9, bbox2d=(0.0, 0.0, 80.0, 40.0), obj_type="Car"):
    return Measurement(position=np.array([float(x), float(y)]), frame=frame,
                       elevation=elevation, yaw=yaw, dims=dims, score=score,
                       bbox2d=bbox2d, obj_type=obj_type)


def frames_from_positions(per_frame):
    """[[(x, y), ...], ...] -> per-frame Measurement lists."""
    return [[measurement(x, y, frame=i) for x, y in frame]
            for i, frame in enumerate(per_frame)]


def single_target_config(**overrides):
    """Config that confirms instantly and never gates out or drops the target."""
    base = dict(min_hits=1, gate_distance=1e6, max_misses=10 ** 6)
    base.update(overrides)
    return RunConfig(**base)


def run_single_target(positions, cfg, gaps=()):
    """Track one object through a position list; gaps are frames with no detection.

    Returns the tracker (trajectory recording on) after the full run.
    """
    gaps = set(gaps)
    tracker = MultiObjectTracker(cfg, record_trajectories=True)
    for frame, pos in enumerate(positions):
        dets = [] if frame in gaps else [measurement(pos[0], pos[1], frame=frame)]
        tracker.step(frame, dets)
    return tracker


def trajectory_by_source(tracker, source):
    """{frame: (x, y)} for one trajectory source of a single-target run."""
    return {p.frame: (p.x, p.y) for p in tracker.trajectory if p.source == source}


# -- reference metric implementations (exhaustive, tiny inputs only) --------

def _min_cost_pairs(dist, threshold):
    """Best one-to-one pairing by exhaustive search.

    Maximizes the number of within-threshold pairs, then minimizes their
    summed distance; mirrors a gated min-cost assignment.
    """
    n_g, n_h = dist.shape
    best_key, best_pairs = None, []
    if n_g <= n_h:
        choices = itertools.permutations(range(n_h), n_g)
        make = lambda perm: [(r, c) for r, c in enumerate(perm)
                             if dist[r, c] <= threshold]
    else:
        choices = itertools.permutations(range(n_g), n_h)
        make = lambda perm: [(r, c) for c, r in enumerate(perm)
                             if dist[r, c] <= threshold]
    for perm in choices:
        pairs = make(perm)
        key = (-len(pairs), sum(dist[r, c] for r, c in pairs))
        if best_key is None or key < best_key:
            best_key, best_pairs = key, pairs
    return best_pairs


def reference_clearmot(gt_frames, hyp_frames, threshold=2.0):
    """CLEAR-MOT counters with the assignment step done by brute force.

    Frames are [(id, position), ...] lists. Returns a dict of counters.
    """
    n = max(len(gt_frames), len(hyp_frames))
    gt_frames = list(gt_frames) + [[]] * (n - len(gt_frames))
    hyp_frames = list(hyp_frames) + [[]] * (n - len(hyp_frames))
    fp = fn = idsw = gt_total = matches_total = 0
    active = {}
    last_match = {}
    for gts, hyps in zip(gt_frames, hyp_frames):
        gt_total += len(gts)
        hyp_pos = {hid: np.asarray(pos, dtype=float) for hid, pos in hyps}
        matched = {}
        used = set()
        for gid, gpos in gts:
            hid = active.get(gid)
            if hid is not None and hid in hyp_pos and hid not in used:
                if np.linalg.norm(np.asarray(gpos) - hyp_pos[hid]) <= threshold:
                    matched[gid] = hid
                    used.add(hid)
        rest_gt = [(gid, np.asarray(gpos, dtype=float))
                   for gid, gpos in gts if gid not in matched]
        rest_hyp = [(hid, pos) for hid, pos in hyps if hid not in used]
        if rest_gt and rest_hyp:
            dist = np.array([[float(np.linalg.norm(gpos - hpos))
                              for _, hpos in rest_hyp]
                             for _, gpos in rest_gt])
            for r, c in _min_cost_pairs(dist, threshold):
                matched[rest_gt[r][0]] = rest_hyp[c][0]
        for gid, hid in matched.items():
            if gid in last_match and last_match[gid] != hid:
                idsw += 1
            last_match[gid] = hid
        fn += len(gts) - len(matched)
        fp += len(hyps) - len(matched)
        matches_total += len(matched)
        active = matched
    mota = 1.0 - (fn + fp + idsw) / gt_total
    return dict(mota=mota, false_positives=fp, false_negatives=fn,
                id_switches=idsw, gt_total=gt_total, matches=matches_total)


def reference_idf1(gt_frames, hyp_frames, threshold=2.0):
    """Identity F1 with the global id pairing enumerated exhaustively."""
    n = max(len(gt_frames), len(hyp_frames))
    gt_frames = list(gt_frames) + [[]] * (n - len(gt_frames))
    hyp_frames = list(hyp_frames) + [[]] * (n - len(hyp_frames))
    gt_count, hyp_count, overlap = {}, {}, {}
    for gts, hyps in zip(gt_frames, hyp_frames):
        for gid, _ in gts:
            gt_count[gid] = gt_count.get(gid, 0) + 1
        for hid, _ in hyps:
            hyp_count[hid] = hyp_count.get(hid, 0) + 1
        for gid, gpos in gts:
            for hid, hpos in hyps:
                d = np.linalg.norm(np.asarray(gpos, dtype=float)
                                   - np.asarray(hpos, dtype=float))
                if d <= threshold:
                    overlap[(gid, hid)] = overlap.get((gid, hid), 0) + 1
    gt_ids = sorted(gt_count)
    hyp_ids = sorted(hyp_count)
    idtp = 0
    if gt_ids and hyp_ids:
        k = min(len(gt_ids), len(hyp_ids))
        for gsub in itertools.permutations(gt_ids, k):
            for hsub in itertools.permutations(hyp_ids, k):
                total = sum(overlap.get((g, h), 0) for g, h in zip(gsub, hsub))
                idtp = max(idtp, total)
    total_gt = sum(gt_count.values())
    total_hyp = sum(hyp_count.values())
    idfn = total_gt - idtp
    idfp = total_hyp - idtp
    denom = 2 * idtp + idfp + idfn
    return dict(idf1=(2 * idtp / denom) if denom else 0.0, idtp=idtp,
                idfp=idfp, idfn=idfn)


def random_tracking_scene(rng, n_objects=3, n_frames=10, drop=0.2,
                          spurious=0.3, jitter=0.5, threshold=2.0):
    """Random gt/hyp frame lists for metric cross-checks."""
    starts = rng.uniform(-20.0, 20.0, size=(n_objects, 2))
    vels = rng.uniform(-1.0, 1.0, size=(n_objects, 2))
    gt_frames, hyp_frames = [], []
    for frame in range(n_frames):
        gts, hyps = [], []
        for obj in range(n_objects):
            pos = starts[obj] + vels[obj] * frame
            gts.append((obj + 1, pos.copy()))
            if rng.random() >= drop:
                hyps.append((101 + obj, pos + rng.normal(0.0, jitter, size=2)))
        if rng.random() < spurious:
            hyps.append((200 + frame, rng.uniform(-30.0, 30.0, size=2)))
        gt_frames.append(gts)
        hyp_frames.append(hyps)
    return gt_frames, hyp_frames
