"""Pinhole camera model, projection, and 2D evidence file I/O (keypoints, masks)."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ShapeError, ValidationError
from .validation import as_float_array, check_positive

# Keypoint order used by the 2D similarity scoring (12 keypoints).
KEYPOINT_NAMES = (
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
)

MIN_DEPTH = 1e-6


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics plus world-to-camera extrinsics."""

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray  # (3, 3) world -> camera
    translation: np.ndarray  # (3,) meters
    width: int
    height: int

    def __post_init__(self):
        check_positive(self.fx, "fx")
        check_positive(self.fy, "fy")
        object.__setattr__(self, "rotation", as_float_array(self.rotation, "rotation", (3, 3)))
        object.__setattr__(self, "translation", as_float_array(self.translation, "translation", (3,)))
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValidationError("principal point must lie inside the image")

    def to_camera(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation


def project(camera: CameraModel, points3d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project world points (..., 3) to pixels (..., 2) with a validity mask.

    Points with camera-frame depth <= MIN_DEPTH are marked invalid and their
    pixel coordinates are NaN.
    """
    pts = np.asarray(points3d, dtype=np.float64)
    if pts.shape[-1] != 3:
        raise ShapeError(f"points must be (..., 3), got {pts.shape}")
    cam = camera.to_camera(pts)
    z = cam[..., 2]
    valid = z > MIN_DEPTH
    safe_z = np.where(valid, z, 1.0)
    u = camera.fx * cam[..., 0] / safe_z + camera.cx
    v = camera.fy * cam[..., 1] / safe_z + camera.cy
    uv = np.stack([u, v], axis=-1)
    uv[~valid] = np.nan
    return uv, valid


def look_at_camera(
    eye: np.ndarray,
    target: np.ndarray,
    fx: float = 500.0,
    fy: float = 500.0,
    width: int = 256,
    height: int = 256,
    up: np.ndarray = (0.0, 0.0, 1.0),
) -> CameraModel:
    """Camera at ``eye`` looking at ``target`` (z-up world, y-down image)."""
    eye = np.asarray(eye, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - eye
    norm = np.linalg.norm(fwd)
    if norm < 1e-9:
        raise ValidationError("camera eye and target coincide")
    fwd = fwd / norm
    up = np.asarray(up, dtype=np.float64)
    right = np.cross(fwd, up)
    rn = np.linalg.norm(right)
    if rn < 1e-9:
        raise ValidationError("camera forward is parallel to up")
    right /= rn
    down = np.cross(fwd, right)
    rot = np.stack([right, down, fwd])  # rows: camera axes in world coords
    return CameraModel(fx, fy, width / 2.0, height / 2.0, rot, -rot @ eye, width, height)


def save_camera(camera: CameraModel, path: str | Path) -> None:
    doc = {
        "fx": camera.fx,
        "fy": camera.fy,
        "cx": camera.cx,
        "cy": camera.cy,
        "R": [float(x) for x in camera.rotation.reshape(-1)],
        "t": [float(x) for x in camera.translation],
        "w": camera.width,
        "h": camera.height,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_camera(path: str | Path) -> CameraModel:
    with open(path) as fh:
        doc = json.load(fh)
    return CameraModel(
        doc["fx"],
        doc["fy"],
        doc["cx"],
        doc["cy"],
        np.asarray(doc["R"], dtype=np.float64).reshape(3, 3),
        np.asarray(doc["t"], dtype=np.float64),
        int(doc["w"]),
        int(doc["h"]),
    )


# ---------------------------------------------------------------------------
# Keypoint tracks


@dataclass(frozen=True)
class KeypointTrack:
    """Per-frame detected 2D keypoints: (T, 12, 3) as (u, v, visibility)."""

    keypoints: np.ndarray
    bbox_areas: np.ndarray  # (T,) pixels^2
    falloff: np.ndarray  # (12,) per-keypoint kappa

    def __post_init__(self):
        kps = as_float_array(self.keypoints, "keypoints", (-1, len(KEYPOINT_NAMES), 3))
        areas = as_float_array(self.bbox_areas, "bbox_areas", (-1,))
        fall = as_float_array(self.falloff, "falloff", (len(KEYPOINT_NAMES),))
        if kps.shape[0] != areas.shape[0]:
            raise ShapeError("keypoints and bbox_areas disagree on frame count")
        object.__setattr__(self, "keypoints", kps)
        object.__setattr__(self, "bbox_areas", areas)
        object.__setattr__(self, "falloff", fall)

    def __len__(self) -> int:
        return self.keypoints.shape[0]


def save_keypoints(track: KeypointTrack, path: str | Path) -> None:
    doc = {
        "frames": [
            {"kps": track.keypoints[t].tolist(), "bbox_area": float(track.bbox_areas[t])}
            for t in range(len(track))
        ],
        "falloff": track.falloff.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_keypoints(path: str | Path, default_falloff: float = 0.1) -> KeypointTrack:
    with open(path) as fh:
        doc = json.load(fh)
    frames = doc["frames"]
    kps = np.array([f["kps"] for f in frames], dtype=np.float64)
    areas = np.array([f["bbox_area"] for f in frames], dtype=np.float64)
    falloff = np.asarray(doc.get("falloff", [default_falloff] * len(KEYPOINT_NAMES)))
    return KeypointTrack(kps, areas, falloff)


# ---------------------------------------------------------------------------
# Mask rasters (PGM, one file per frame)


def save_mask_pgm(mask: np.ndarray, path: str | Path, binary: bool = True) -> None:
    """Write a boolean mask as PGM; foreground = 255, background = 0."""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ShapeError(f"mask must be 2-D, got {mask.shape}")
    h, w = mask.shape
    data = np.where(mask, 255, 0).astype(np.uint8)
    if binary:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode())
            fh.write(data.tobytes())
    else:
        with open(path, "w") as fh:
            fh.write(f"P2\n{w} {h}\n255\n")
            for row in data:
                fh.write(" ".join(map(str, row)) + "\n")


def load_mask_pgm(path: str | Path) -> np.ndarray:
    """Read a P2/P5 PGM; values > 127 map to foreground."""
    raw = Path(path).read_bytes()
    if raw[:2] not in (b"P2", b"P5"):
        raise ValidationError(f"{path}: not a PGM file")
    binary = raw[:2] == b"P5"
    # header = magic, width, height, maxval with '#' comments allowed
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3:
        m = re.match(rb"(?:\s+|#[^\n]*\n)*(\S+)", raw[pos:])
        if m is None:
            raise ValidationError(f"{path}: truncated PGM header")
        tokens.append(m.group(1))
        pos += m.end()
    w, h, maxval = (int(t) for t in tokens)
    if maxval <= 0 or maxval > 255:
        raise ValidationError(f"{path}: unsupported PGM maxval {maxval}")
    if binary:
        pos += 1  # single whitespace byte after maxval
        data = np.frombuffer(raw, dtype=np.uint8, count=w * h, offset=pos)
    else:
        data = np.array(raw[pos:].split()[: w * h], dtype=np.int64)
    if data.size != w * h:
        raise ValidationError(f"{path}: PGM payload truncated")
    return (data.reshape(h, w) > 127)


def mask_frame_path(directory: str | Path, frame: int) -> Path:
    return Path(directory) / f"mask_{frame:06d}.pgm"


def load_mask_sequence(directory: str | Path, frame_count: int) -> list[np.ndarray]:
    return [load_mask_pgm(mask_frame_path(directory, t)) for t in range(frame_count)]
