"""Rotation algebra: 6D rotation codec, axis-angle, geodesic distance.

The 6D representation stores the first two columns of a rotation matrix; the
full matrix is recovered by Gram-Schmidt orthonormalization plus a cross
product.  All functions accept either a single rotation or a leading batch
dimension.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateRotationError, ShapeError, ValidationError

IDENTITY_6D = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])

_EPS = 1e-12


def rot6d_to_matrix(r6: np.ndarray, strict: bool = True) -> np.ndarray:
    """Decode 6D rotation(s) (..., 6) into rotation matrices (..., 3, 3).

    Columns: c1 = normalize(a), c2 = normalize(b - (c1.b) c1), c3 = c1 x c2,
    where r6 = [a | b].  With ``strict`` (the default), degenerate inputs
    (zero-norm a, or b parallel to a) raise :class:`DegenerateRotationError`;
    non-strict callers (training losses evaluating raw network output) get
    norm clamping instead.
    """
    r6 = np.asarray(r6, dtype=np.float64)
    if r6.shape[-1] != 6:
        raise ShapeError(f"6D rotation must have last dim 6, got {r6.shape}")
    a = r6[..., :3]
    b = r6[..., 3:]
    na = np.linalg.norm(a, axis=-1)
    if strict and np.any(na < 1e-8):
        raise DegenerateRotationError("first 3-vector of 6D rotation has near-zero norm")
    c1 = a / np.maximum(na, _GS_MIN_NORM)[..., None]
    proj = np.sum(c1 * b, axis=-1, keepdims=True)
    u = b - proj * c1
    nu = np.linalg.norm(u, axis=-1)
    if strict and np.any(nu < 1e-8):
        raise DegenerateRotationError("6D rotation columns are (near) parallel")
    c2 = u / np.maximum(nu, _GS_MIN_NORM)[..., None]
    c3 = np.cross(c1, c2)
    return np.stack([c1, c2, c3], axis=-1)


def matrix_to_rot6d(rot: np.ndarray) -> np.ndarray:
    """Encode rotation matrices (..., 3, 3) as 6D vectors (first two columns)."""
    rot = np.asarray(rot, dtype=np.float64)
    if rot.shape[-2:] != (3, 3):
        raise ShapeError(f"rotation matrix must be (..., 3, 3), got {rot.shape}")
    err = np.abs(np.einsum("...ij,...ik->...jk", rot, rot) - np.eye(3))
    if np.any(err > 1e-6):
        raise ValidationError("matrix is not orthonormal within 1e-6")
    return np.concatenate([rot[..., :, 0], rot[..., :, 1]], axis=-1)


def rot6d_to_matrix_grad(r6: np.ndarray, grad_rot: np.ndarray) -> np.ndarray:
    """Backpropagate d(loss)/d(rotation matrix) to d(loss)/d(6D input).

    Vectorized reverse-mode pass through the Gram-Schmidt construction; shapes
    match :func:`rot6d_to_matrix` ((..., 6) and (..., 3, 3)).
    """
    r6 = np.asarray(r6, dtype=np.float64)
    grad_rot = np.asarray(grad_rot, dtype=np.float64)
    a = r6[..., :3]
    b = r6[..., 3:]
    na = np.maximum(np.linalg.norm(a, axis=-1, keepdims=True), _GS_MIN_NORM)
    c1 = a / na
    proj = np.sum(c1 * b, axis=-1, keepdims=True)
    u = b - proj * c1
    nu = np.maximum(np.linalg.norm(u, axis=-1, keepdims=True), _GS_MIN_NORM)
    c2 = u / nu

    g1 = grad_rot[..., :, 0].copy()
    g2 = grad_rot[..., :, 1].copy()
    g3 = grad_rot[..., :, 2]

    # c3 = c1 x c2:  dL/dc1 += c2 x g3,  dL/dc2 += g3 x c1
    g1 += np.cross(c2, g3)
    g2 += np.cross(g3, c1)

    # c2 = u / |u|:  dL/du = (g2 - (c2.g2) c2) / |u|
    gu = (g2 - np.sum(c2 * g2, axis=-1, keepdims=True) * c2) / nu

    # u = b - (c1.b) c1
    gb = gu - np.sum(c1 * gu, axis=-1, keepdims=True) * c1
    g1 += -np.sum(gu * c1, axis=-1, keepdims=True) * b - proj * gu

    # c1 = a / |a|
    ga = (g1 - np.sum(c1 * g1, axis=-1, keepdims=True) * c1) / na
    return np.concatenate([ga, gb], axis=-1)


def axis_angle_to_matrix(theta: np.ndarray) -> np.ndarray:
    """Rodrigues formula for exponential coordinates (..., 3) -> (..., 3, 3)."""
    theta = np.asarray(theta, dtype=np.float64)
    angle = np.linalg.norm(theta, axis=-1)
    small = angle < 1e-10
    safe = np.where(small, 1.0, angle)
    axis = theta / safe[..., None]
    k = _hat(axis)
    s = np.sin(angle)[..., None, None]
    c = np.cos(angle)[..., None, None]
    rot = np.eye(3) + s * k + (1.0 - c) * (k @ k)
    if np.any(small):
        near = np.broadcast_to(np.eye(3) + _hat(theta), rot.shape)
        rot = np.where(small[..., None, None], near, rot)
    return rot


def matrix_to_axis_angle(rot: np.ndarray) -> np.ndarray:
    """Log map (..., 3, 3) -> exponential coordinates (..., 3), angle in [0, pi]."""
    rot = np.asarray(rot, dtype=np.float64)
    tr = np.clip((np.trace(rot, axis1=-2, axis2=-1) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(tr)
    vec = np.stack(
        [
            rot[..., 2, 1] - rot[..., 1, 2],
            rot[..., 0, 2] - rot[..., 2, 0],
            rot[..., 1, 0] - rot[..., 0, 1],
        ],
        axis=-1,
    )
    sin_a = np.sin(angle)
    out = np.empty_like(vec)
    small = angle < 1e-7
    large = angle > np.pi - 1e-5
    mid = ~(small | large)
    # generic case: axis from the skew part
    scale = np.where(mid, angle / np.where(mid, 2.0 * sin_a, 1.0), 0.0)
    out[...] = vec * scale[..., None]
    if np.any(small):
        out[small] = 0.5 * vec[small]
    if np.any(large):
        # near pi the skew part vanishes; recover the axis from the symmetric part
        idx = np.argwhere(large)
        for i in idx:
            r = rot[tuple(i)]
            ang = angle[tuple(i)]
            axis_sq = np.clip((np.diag(r) + 1.0) / 2.0, 0.0, None)
            axis = np.sqrt(axis_sq)
            j = int(np.argmax(axis))
            if axis[j] > 0:
                for k in range(3):
                    if k != j:
                        axis[k] = (r[j, k] + r[k, j]) / (4.0 * axis[j])
            out[tuple(i)] = ang * axis / max(np.linalg.norm(axis), _EPS)
    return out


def so3_left_jacobian(theta: np.ndarray) -> np.ndarray:
    """Left Jacobian J_l of SO(3): world angular velocity = J_l(theta) @ theta_dot.

    Closed form J_l = I + ((1-cos)/t^2) [t]x + ((t-sin t)/t^3) [t]x^2.
    """
    theta = np.asarray(theta, dtype=np.float64)
    angle = np.linalg.norm(theta, axis=-1)
    k = _hat(theta)
    small = angle < 1e-6
    safe = np.where(small, 1.0, angle)
    a = np.where(small, 0.5, (1.0 - np.cos(angle)) / safe**2)
    b = np.where(small, 1.0 / 6.0, (angle - np.sin(angle)) / safe**3)
    return np.eye(3) + a[..., None, None] * k + b[..., None, None] * (k @ k)


def rotation_difference(r6_a: np.ndarray, r6_b: np.ndarray) -> np.ndarray:
    """Geodesic angle(s) in [0, pi] between two 6D rotations."""
    ra = rot6d_to_matrix(r6_a)
    rb = rot6d_to_matrix(r6_b)
    rel = np.einsum("...ji,...jk->...ik", ra, rb)  # Ra^T Rb
    tr = np.clip((np.trace(rel, axis1=-2, axis2=-1) - 1.0) / 2.0, -1.0, 1.0)
    return np.arccos(tr)


def geodesic_angle(rot_a: np.ndarray, rot_b: np.ndarray) -> np.ndarray:
    """Geodesic angle(s) between rotation matrices."""
    rel = np.einsum("...ji,...jk->...ik", rot_a, rot_b)
    tr = np.clip((np.trace(rel, axis1=-2, axis2=-1) - 1.0) / 2.0, -1.0, 1.0)
    return np.arccos(tr)


def random_rotation(rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Uniformly sampled rotation matrices via normalized quaternions."""
    size = (4,) if n is None else (n, 4)
    q = rng.normal(size=size)
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    rot = np.empty(q.shape[:-1] + (3, 3))
    rot[..., 0, 0] = 1 - 2 * (y * y + z * z)
    rot[..., 0, 1] = 2 * (x * y - w * z)
    rot[..., 0, 2] = 2 * (x * z + w * y)
    rot[..., 1, 0] = 2 * (x * y + w * z)
    rot[..., 1, 1] = 1 - 2 * (x * x + z * z)
    rot[..., 1, 2] = 2 * (y * z - w * x)
    rot[..., 2, 0] = 2 * (x * z - w * y)
    rot[..., 2, 1] = 2 * (y * z + w * x)
    rot[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return rot


def _hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrices (..., 3) -> (..., 3, 3)."""
    v = np.asarray(v, dtype=np.float64)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out
