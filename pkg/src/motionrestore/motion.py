"""Motion representation: frames, sequences, the 135-d codec, FK, velocities.

Frames store root translation plus per-joint 6D rotations (root rotation at
joint 0, body joint rotations local to their parent).  The canonical codec for
the 22-joint humanoid packs a frame as
[translation(3) | root 6D(6) | 21 x joint 6D(126)] = 135 values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InsufficientFramesError, ShapeError, ValidationError
from .rotations import (
    IDENTITY_6D,
    matrix_to_axis_angle,
    matrix_to_rot6d,
    rot6d_to_matrix,
    rot6d_to_matrix_grad,
)
from .skeleton import Skeleton
from .validation import as_float_array, check_positive

FRAME_DIM = 135
CANONICAL_JOINTS = 22


@dataclass(frozen=True)
class MotionFrame:
    """One pose: root translation (3,) and per-joint 6D rotations (J, 6)."""

    translation: np.ndarray
    rotations: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "translation", as_float_array(self.translation, "translation", (3,)))
        object.__setattr__(self, "rotations", as_float_array(self.rotations, "rotations", (-1, 6)))

    @property
    def joint_count(self) -> int:
        return self.rotations.shape[0]

    @staticmethod
    def identity(joint_count: int = CANONICAL_JOINTS, translation=(0.0, 0.0, 0.0)) -> "MotionFrame":
        return MotionFrame(np.asarray(translation, dtype=np.float64), np.tile(IDENTITY_6D, (joint_count, 1)))


@dataclass(frozen=True)
class JointPose:
    """World-space result of forward kinematics."""

    positions: np.ndarray  # (J, 3)
    rotations: np.ndarray  # (J, 3, 3)


class MotionSequence:
    """Timed sequence of frames stored as dense arrays.

    translations: (T, 3); rotations: (T, J, 6).  Immutable by convention:
    operations return new sequences.
    """

    def __init__(self, fps: float, translations: np.ndarray, rotations: np.ndarray):
        self.fps = check_positive(fps, "fps")
        self.translations = as_float_array(translations, "translations", (-1, 3))
        self.rotations = as_float_array(rotations, "rotations", (-1, -1, 6))
        if self.translations.shape[0] != self.rotations.shape[0]:
            raise ShapeError("translations and rotations disagree on frame count")
        self._velocities: tuple[np.ndarray, np.ndarray] | None = None

    @classmethod
    def from_frames(cls, fps: float, frames: list[MotionFrame]) -> "MotionSequence":
        if not frames:
            raise ValidationError("sequence needs at least one frame")
        return cls(
            fps,
            np.stack([f.translation for f in frames]),
            np.stack([f.rotations for f in frames]),
        )

    def __len__(self) -> int:
        return self.translations.shape[0]

    @property
    def joint_count(self) -> int:
        return self.rotations.shape[1]

    def frame(self, t: int) -> MotionFrame:
        return MotionFrame(self.translations[t], self.rotations[t])

    def frames(self) -> list[MotionFrame]:
        return [self.frame(t) for t in range(len(self))]

    def slice(self, start: int, stop: int) -> "MotionSequence":
        return MotionSequence(self.fps, self.translations[start:stop], self.rotations[start:stop])

    def copy(self) -> "MotionSequence":
        return MotionSequence(self.fps, self.translations.copy(), self.rotations.copy())

    def velocities(self, skeleton: Skeleton) -> tuple[np.ndarray, np.ndarray]:
        """Cached finite-difference velocities; see :func:`finite_velocities`."""
        if self._velocities is None:
            self._velocities = finite_velocities(self, skeleton)
        return self._velocities


# ---------------------------------------------------------------------------
# 135-d frame codec


def encode_frame(frame: MotionFrame) -> np.ndarray:
    if frame.joint_count != CANONICAL_JOINTS:
        raise ShapeError(f"canonical codec needs {CANONICAL_JOINTS} joints, got {frame.joint_count}")
    return np.concatenate([frame.translation, frame.rotations.reshape(-1)])


def decode_frame(vec: np.ndarray) -> MotionFrame:
    vec = as_float_array(vec, "frame vector", (-1,))
    if vec.shape[0] != FRAME_DIM:
        raise ShapeError(f"frame vector must have length {FRAME_DIM}, got {vec.shape[0]}")
    return MotionFrame(vec[:3], vec[3:].reshape(CANONICAL_JOINTS, 6))


def encode_sequence(seq: MotionSequence) -> np.ndarray:
    """(T, 135) matrix of encoded frames."""
    if seq.joint_count != CANONICAL_JOINTS:
        raise ShapeError(f"canonical codec needs {CANONICAL_JOINTS} joints, got {seq.joint_count}")
    t = len(seq)
    return np.concatenate([seq.translations, seq.rotations.reshape(t, -1)], axis=1)


def decode_sequence(mat: np.ndarray, fps: float) -> MotionSequence:
    mat = as_float_array(mat, "frame matrix", (-1, FRAME_DIM))
    return MotionSequence(fps, mat[:, :3].copy(), mat[:, 3:].reshape(-1, CANONICAL_JOINTS, 6).copy())


# ---------------------------------------------------------------------------
# Forward kinematics


def forward_kinematics(skeleton: Skeleton, frame: MotionFrame) -> JointPose:
    """World joint positions and rotations for one frame."""
    if frame.joint_count != skeleton.joint_count:
        raise ShapeError(
            f"frame has {frame.joint_count} joints, skeleton {skeleton.joint_count}"
        )
    pos, rot = fk_batch(skeleton, frame.translation[None], frame.rotations[None])
    return JointPose(pos[0], rot[0])


def fk_batch(
    skeleton: Skeleton, translations: np.ndarray, rotations6d: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized FK over T frames: returns positions (T, J, 3), world rotations (T, J, 3, 3)."""
    t = translations.shape[0]
    j = skeleton.joint_count
    if rotations6d.shape[:2] != (t, j):
        raise ShapeError(f"rotations must be ({t}, {j}, 6), got {rotations6d.shape}")
    local = rot6d_to_matrix(rotations6d)  # (T, J, 3, 3)
    world = np.empty_like(local)
    pos = np.empty((t, j, 3))
    world[:, 0] = local[:, 0]
    pos[:, 0] = translations
    for jj in range(1, j):
        par = skeleton.parents[jj]
        world[:, jj] = world[:, par] @ local[:, jj]
        pos[:, jj] = pos[:, par] + np.einsum("tab,b->ta", world[:, par], skeleton.offsets[jj])
    return pos, world


def fk_backward(
    skeleton: Skeleton,
    rotations6d: np.ndarray,
    world: np.ndarray,
    grad_positions: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Reverse-mode FK: d(loss)/d(positions) -> d(loss)/d(translations, rot6d).

    ``world`` is the world-rotation cache from :func:`fk_batch`; shapes are
    (T, J, 6), (T, J, 3, 3) and (T, J, 3).
    """
    t, j = rotations6d.shape[:2]
    local = rot6d_to_matrix(rotations6d)
    gp = np.ascontiguousarray(grad_positions, dtype=np.float64).copy()
    g_world = np.zeros((t, j, 3, 3))
    g_local = np.empty((t, j, 3, 3))
    for jj in range(j - 1, 0, -1):
        par = skeleton.parents[jj]
        gp[:, par] += gp[:, jj]
        g_world[:, par] += gp[:, jj, :, None] * skeleton.offsets[jj][None, None, :]
        g_world[:, par] += g_world[:, jj] @ local[:, jj].transpose(0, 2, 1)
        g_local[:, jj] = world[:, par].transpose(0, 2, 1) @ g_world[:, jj]
    g_local[:, 0] = g_world[:, 0]
    grad_rot6d = rot6d_to_matrix_grad(rotations6d, g_local)
    return gp[:, 0], grad_rot6d


# ---------------------------------------------------------------------------
# Velocities


def finite_velocities(seq: MotionSequence, skeleton: Skeleton) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame joint velocities: linear (T, J, 3) m/s and angular (T, J, 3) rad/s.

    Linear is the forward difference of world joint positions times fps; angular
    is the axis-angle of R_t^T R_{t+1} (body frame) times fps.  The last frame
    copies the penultimate value.
    """
    if len(seq) < 2:
        raise InsufficientFramesError("velocities need at least 2 frames")
    pos, world = fk_batch(skeleton, seq.translations, seq.rotations)
    lin = np.empty_like(pos)
    lin[:-1] = (pos[1:] - pos[:-1]) * seq.fps
    lin[-1] = lin[-2]
    rel = np.einsum("tjba,tjbc->tjac", world[:-1], world[1:])  # R_t^T R_{t+1}
    ang = np.empty_like(pos)
    ang[:-1] = matrix_to_axis_angle(rel) * seq.fps
    ang[-1] = ang[-2]
    return lin, ang


# ---------------------------------------------------------------------------
# Motion file I/O


def save_motion(seq: MotionSequence, path: str | Path, skeleton_id: str = "desk_humanoid") -> None:
    doc = {
        "fps": seq.fps,
        "skeleton": skeleton_id,
        "frames": [
            {"t": list(map(float, seq.translations[t])), "r": seq.rotations[t].tolist()}
            for t in range(len(seq))
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_motion(path: str | Path) -> MotionSequence:
    with open(path) as fh:
        doc = json.load(fh)
    frames = doc["frames"]
    if not frames:
        raise ValidationError(f"{path}: motion file has no frames")
    translations = np.array([f["t"] for f in frames], dtype=np.float64)
    rotations = np.array([f["r"] for f in frames], dtype=np.float64)
    return MotionSequence(doc["fps"], translations, rotations)


def sequence_from_matrices(
    fps: float, translations: np.ndarray, rotmats: np.ndarray
) -> MotionSequence:
    """Build a sequence from world-root translation + local rotation matrices (T, J, 3, 3)."""
    return MotionSequence(fps, translations, matrix_to_rot6d(rotmats))
