import numpy as np
import pytest

from motionrestore.errors import DegenerateRotationError, ValidationError
from motionrestore.rotations import (
    axis_angle_to_matrix,
    matrix_to_axis_angle,
    matrix_to_rot6d,
    random_rotation,
    rot6d_to_matrix,
    rot6d_to_matrix_grad,
    rotation_difference,
    so3_left_jacobian,
)

RNG = np.random.default_rng(0)


def test_identity_6d():
    assert np.allclose(rot6d_to_matrix([1, 0, 0, 0, 1, 0]), np.eye(3))


def test_90deg_about_z():
    # hand Gram-Schmidt: columns (0,1,0), (-1,0,0), cross = (0,0,1)
    expected = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], dtype=float)
    assert np.allclose(rot6d_to_matrix([0, 1, 0, -1, 0, 0]), expected)


def test_non_orthogonal_input_orthonormalizes():
    r = rot6d_to_matrix([2, 0, 0, 0.5, 3, 0])
    assert np.allclose(r, np.eye(3), atol=1e-12)
    # independent check: numpy QR of the two raw columns gives the same frame
    q, _ = np.linalg.qr(np.array([[2, 0.5], [0, 3.0], [0, 0.0]]))
    q *= np.sign(np.diag(np.array([[2, 0.5], [0, 3.0]]))) # fix QR sign convention
    assert np.allclose(r[:, :2], q, atol=1e-12)
    assert np.max(np.abs(r.T @ r - np.eye(3))) < 1e-12


def test_degenerate_inputs_raise():
    with pytest.raises(DegenerateRotationError):
        rot6d_to_matrix([0, 0, 0, 0, 1, 0])
    with pytest.raises(DegenerateRotationError):
        rot6d_to_matrix([1, 0, 0, 2, 0, 0])


def test_matrix_to_rot6d_identity_and_flip():
    assert np.allclose(matrix_to_rot6d(np.eye(3)), [1, 0, 0, 0, 1, 0])
    rx180 = np.diag([1.0, -1.0, -1.0])
    assert np.allclose(matrix_to_rot6d(rx180), [1, 0, 0, 0, -1, 0])


def test_matrix_to_rot6d_rejects_non_orthonormal():
    with pytest.raises(ValidationError):
        matrix_to_rot6d(np.eye(3) * 1.1)


def test_roundtrip_1000_random_rotations():
    rots = random_rotation(RNG, 1000)
    back = rot6d_to_matrix(matrix_to_rot6d(rots))
    assert np.max(np.abs(back - rots)) < 1e-9
    orth = np.einsum("nij,nik->njk", back, back) - np.eye(3)
    assert np.max(np.abs(orth)) < 1e-9
    assert np.allclose(np.linalg.det(back), 1.0)


def test_rotation_difference_basics():
    r = matrix_to_rot6d(random_rotation(RNG))
    assert rotation_difference(r, r) == pytest.approx(0.0, abs=1e-7)
    ident = np.array([1, 0, 0, 0, 1, 0], dtype=float)
    for axis in np.eye(3):
        quarter = matrix_to_rot6d(axis_angle_to_matrix(axis * np.pi / 2))
        assert rotation_difference(ident, quarter) == pytest.approx(np.pi / 2, abs=1e-9)


def test_rotation_difference_triangle_inequality():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a, b, c = (matrix_to_rot6d(random_rotation(rng)) for _ in range(3))
        ab = rotation_difference(a, b)
        bc = rotation_difference(b, c)
        ac = rotation_difference(a, c)
        assert ac <= ab + bc + 1e-9


def test_axis_angle_roundtrip():
    rng = np.random.default_rng(3)
    theta = rng.normal(size=(500, 3))
    theta *= (rng.uniform(0.001, np.pi - 0.01, size=500) / np.linalg.norm(theta, axis=1))[:, None]
    back = matrix_to_axis_angle(axis_angle_to_matrix(theta))
    assert np.max(np.abs(back - theta)) < 1e-7


def test_axis_angle_near_pi():
    theta = np.array([0.0, 0.0, np.pi - 1e-9])
    rot = axis_angle_to_matrix(theta)
    back = matrix_to_axis_angle(rot)
    assert np.linalg.norm(back) == pytest.approx(np.pi, abs=1e-5)
    assert np.allclose(axis_angle_to_matrix(back), rot, atol=1e-5)


def test_left_jacobian_against_finite_difference():
    # J_l maps exp-coordinate rates to world angular velocity: R_dot R^T = [J_l theta_dot]x
    rng = np.random.default_rng(11)
    h = 1e-7
    for _ in range(50):
        theta = rng.normal(size=3)
        dtheta = rng.normal(size=3)
        r0 = axis_angle_to_matrix(theta)
        r1 = axis_angle_to_matrix(theta + h * dtheta)
        omega_skew = (r1 - r0) @ r0.T / h
        omega = np.array([omega_skew[2, 1], omega_skew[0, 2], omega_skew[1, 0]])
        assert np.allclose(so3_left_jacobian(theta) @ dtheta, omega, atol=1e-5)


def test_rot6d_grad_matches_finite_differences():
    rng = np.random.default_rng(5)
    for _ in range(30):
        r6 = rng.normal(size=6)
        if np.linalg.norm(r6[:3]) < 0.3:
            continue
        target = rng.normal(size=(3, 3))

        def loss(v):
            return float(np.sum(rot6d_to_matrix(v) * target))

        grad = rot6d_to_matrix_grad(r6, target)
        h = 1e-6
        for k in range(6):
            e = np.zeros(6)
            e[k] = h
            fd = (loss(r6 + e) - loss(r6 - e)) / (2 * h)
            assert grad[k] == pytest.approx(fd, rel=1e-4, abs=1e-7)
