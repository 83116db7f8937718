"""2D agreement scoring and flawed-frame flagging.

Scores the projection of a 3D motion against detected keypoints (OKS) or
segmentation masks (fraction of projected body surface samples on foreground),
then groups low-scoring frames into flaw segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .camera import KEYPOINT_NAMES, CameraModel, KeypointTrack, project
from .errors import ShapeError, UndefinedScoreError, ValidationError
from .motion import MotionFrame, MotionSequence, fk_batch
from .skeleton import Skeleton

DEFAULT_THRESHOLD = 0.5
DEFAULT_MERGE_GAP = 3
DEFAULT_FALLOFF = 0.1


@dataclass(frozen=True)
class FlawSegment:
    """Inclusive frame range flagged as flawed, with its mean similarity score."""

    start: int
    end: int
    mean_score: float

    def __post_init__(self):
        if not (0 <= self.start <= self.end):
            raise ValidationError(f"bad segment bounds [{self.start}, {self.end}]")

    def frames(self) -> range:
        return range(self.start, self.end + 1)

    def __len__(self) -> int:
        return self.end - self.start + 1


def oks(
    projected: np.ndarray,
    detected: np.ndarray,
    visibility: np.ndarray,
    scale_sq: np.ndarray,
) -> float:
    """Object keypoint similarity over one frame.

    score = sum_i exp(-d_i^2 / (2 e_i^2)) [v_i > 0] / sum_i [v_i > 0], where
    e_i^2 = ``scale_sq``.  Projected keypoints that are invalid (NaN, behind
    the camera) contribute zero while still counting in the denominator.
    Raises :class:`UndefinedScoreError` when every keypoint is invisible.
    """
    projected = np.asarray(projected, dtype=np.float64)
    detected = np.asarray(detected, dtype=np.float64)
    visibility = np.asarray(visibility)
    scale_sq = np.asarray(scale_sq, dtype=np.float64)
    if projected.shape != detected.shape or projected.shape[-1] != 2:
        raise ShapeError("projected/detected keypoints must both be (K, 2)")
    vis = visibility > 0
    if not np.any(vis):
        raise UndefinedScoreError("OKS undefined: no visible keypoints")
    if np.any(scale_sq[vis] <= 0):
        raise ValidationError("keypoint scale^2 must be positive for visible keypoints")
    d_sq = np.sum((projected - detected) ** 2, axis=-1)
    term = np.exp(-d_sq / (2.0 * scale_sq))
    term = np.where(np.isfinite(term), term, 0.0)
    return float(np.sum(term[vis]) / np.count_nonzero(vis))


def keypoint_scale_sq(bbox_area: float, falloff: np.ndarray) -> np.ndarray:
    """Per-keypoint e_i^2 = bbox_area * kappa_i^2."""
    return float(bbox_area) * np.asarray(falloff, dtype=np.float64) ** 2


def mask_pose_similarity(
    camera: CameraModel, surface_samples: np.ndarray, mask: np.ndarray
) -> float:
    """Fraction of projected body surface samples landing on foreground pixels.

    Samples projecting outside the image count as background; samples behind
    the camera are excluded from the denominator.  Raises
    :class:`UndefinedScoreError` when no sample is projectable.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (camera.height, camera.width):
        raise ShapeError(
            f"mask shape {mask.shape} does not match camera image {camera.height}x{camera.width}"
        )
    uv, valid = project(camera, surface_samples)
    if not np.any(valid):
        raise UndefinedScoreError("MPS undefined: no valid projected samples")
    uv = uv[valid]
    cols = np.floor(uv[:, 0]).astype(int)
    rows = np.floor(uv[:, 1]).astype(int)
    inside = (cols >= 0) & (cols < camera.width) & (rows >= 0) & (rows < camera.height)
    hits = np.zeros(uv.shape[0], dtype=bool)
    hits[inside] = mask[rows[inside], cols[inside]]
    return float(np.count_nonzero(hits) / uv.shape[0])


def body_surface_samples(
    skeleton: Skeleton, frame: MotionFrame, samples_per_bone: int = 32
) -> np.ndarray:
    """Deterministic points on every bone capsule surface, (bones * n, 3).

    Ring pattern: up to 8 points per ring at stations spread along the bone,
    built in the parent's local frame so samples move rigidly with the bone.
    """
    pos, world = fk_batch(skeleton, frame.translation[None], frame.rotations[None])
    return _surface_samples_from_fk(skeleton, pos[0], world[0], samples_per_bone)


def sequence_surface_samples(
    skeleton: Skeleton, seq: MotionSequence, samples_per_bone: int = 32
) -> np.ndarray:
    """(T, bones * n, 3) surface samples for every frame."""
    pos, world = fk_batch(skeleton, seq.translations, seq.rotations)
    out = [
        _surface_samples_from_fk(skeleton, pos[t], world[t], samples_per_bone)
        for t in range(len(seq))
    ]
    return np.stack(out)


def _local_ring_pattern(offset: np.ndarray, radius: float, n: int) -> np.ndarray:
    """Sample points around the segment (0 -> offset) at distance ``radius``."""
    length = np.linalg.norm(offset)
    axis = offset / length
    # deterministic perpendicular: cross with the least-aligned basis vector
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(axis)))] = 1.0
    u = np.cross(axis, helper)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    per_ring = min(n, 8)
    rings = math.ceil(n / per_ring)
    pts = np.empty((n, 3))
    k = 0
    for i in range(rings):
        count = min(per_ring, n - k)
        station = (i + 0.5) / rings * length
        for jj in range(count):
            ang = 2.0 * np.pi * jj / count + i * (np.pi / 8.0)
            pts[k] = axis * station + radius * (np.cos(ang) * u + np.sin(ang) * v)
            k += 1
    return pts


def _surface_samples_from_fk(
    skeleton: Skeleton, positions: np.ndarray, world: np.ndarray, samples_per_bone: int
) -> np.ndarray:
    samples = []
    for par, child in skeleton.bones():
        local = _local_ring_pattern(skeleton.offsets[child], skeleton.radii[child], samples_per_bone)
        samples.append(positions[par] + local @ world[par].T)
    return np.concatenate(samples, axis=0)


def bone_sample_index(skeleton: Skeleton, samples_per_bone: int = 32) -> np.ndarray:
    """Child-joint index owning each row of the surface-sample arrays."""
    return np.repeat(np.arange(1, skeleton.joint_count), samples_per_bone)


# ---------------------------------------------------------------------------
# Per-frame score sequences


def oks_scores(
    seq: MotionSequence,
    skeleton: Skeleton,
    camera: CameraModel,
    track: KeypointTrack,
) -> np.ndarray:
    """Per-frame OKS of the motion's projected keypoints vs the track; NaN = undefined."""
    if len(track) != len(seq):
        raise ShapeError("keypoint track length does not match sequence")
    kp_idx = [skeleton.index(name) for name in KEYPOINT_NAMES]
    pos, _ = fk_batch(skeleton, seq.translations, seq.rotations)
    uv, _ = project(camera, pos[:, kp_idx])
    scores = np.full(len(seq), np.nan)
    for t in range(len(seq)):
        det = track.keypoints[t]
        try:
            scores[t] = oks(
                uv[t], det[:, :2], det[:, 2], keypoint_scale_sq(track.bbox_areas[t], track.falloff)
            )
        except UndefinedScoreError:
            pass
    return scores


def mps_scores(
    seq: MotionSequence,
    skeleton: Skeleton,
    camera: CameraModel,
    masks: list[np.ndarray],
    samples_per_bone: int = 8,
) -> np.ndarray:
    """Per-frame mask-pose similarity; NaN = undefined."""
    if len(masks) != len(seq):
        raise ShapeError("mask count does not match sequence length")
    samples = sequence_surface_samples(skeleton, seq, samples_per_bone)
    scores = np.full(len(seq), np.nan)
    for t in range(len(seq)):
        try:
            scores[t] = mask_pose_similarity(camera, samples[t], masks[t])
        except UndefinedScoreError:
            pass
    return scores


# ---------------------------------------------------------------------------
# Flaw flagging


def flag_flaws(
    scores: np.ndarray,
    threshold: float = DEFAULT_THRESHOLD,
    merge_gap: int = DEFAULT_MERGE_GAP,
) -> list[FlawSegment]:
    """Group frames scoring below ``threshold`` into merged flaw segments.

    NaN scores (undefined frames) inherit the flag of the nearest defined
    frame, ties flagged; runs separated by <= ``merge_gap`` frames merge.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    if n == 0:
        return []
    defined = np.isfinite(scores)
    flagged = np.zeros(n, dtype=bool)
    flagged[defined] = scores[defined] < threshold
    if not np.all(defined):
        if not np.any(defined):
            flagged[:] = True
        else:
            idx = np.arange(n)
            for t in idx[~defined]:
                left = idx[defined & (idx < t)]
                right = idx[defined & (idx > t)]
                dl = t - left[-1] if left.size else np.inf
                dr = right[0] - t if right.size else np.inf
                if dl < dr:
                    flagged[t] = flagged[left[-1]]
                elif dr < dl:
                    flagged[t] = flagged[right[0]]
                else:
                    flagged[t] = True
    runs = _runs(flagged)
    merged: list[list[int]] = []
    for start, end in runs:
        if merged and start - merged[-1][1] - 1 <= merge_gap:
            merged[-1][1] = end
        else:
            merged.append([start, end])
    segments = []
    for start, end in merged:
        span = scores[start : end + 1]
        span = span[np.isfinite(span)]
        mean = float(np.mean(span)) if span.size else 0.0
        segments.append(FlawSegment(start, end, mean))
    return segments


def _runs(flags: np.ndarray) -> list[tuple[int, int]]:
    runs = []
    start = None
    for i, f in enumerate(flags):
        if f and start is None:
            start = i
        elif not f and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(flags) - 1))
    return runs
