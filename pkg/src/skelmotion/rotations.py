"""Euler / rotation-matrix / exponential-map conversions and the angle-space
frame error used by every evaluation metric.

Euler convention: intrinsic rotations applied about Z, then Y, then X. A
triple is stored component-wise as (x, y, z), so the composed matrix is
``Rz(z) @ Ry(y) @ Rx(x)``. The convention tag lives on the SkeletonSpec and
is validated here; only "zyx" is implemented.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError

GIMBAL_EPS = 1e-6
ROTATION_ATOL = 1e-9


def normalize_angle(a):
    """Wrap to the canonical range (-pi, pi]."""
    a = (a + np.pi) % (2.0 * np.pi) - np.pi
    # the modulo maps pi to -pi; put it back on the closed end
    return np.where(a <= -np.pi, a + 2.0 * np.pi, a) if isinstance(a, np.ndarray) else (
        a + 2.0 * np.pi if a <= -np.pi else a
    )


def _check_convention(convention):
    if convention != "zyx":
        raise ValueError(f"unsupported euler convention {convention!r}")


def skew(v):
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def euler_to_rotmat(angles, convention="zyx"):
    _check_convention(convention)
    ax, ay, az = float(angles[0]), float(angles[1]), float(angles[2])
    cx, sx = np.cos(ax), np.sin(ax)
    cy, sy = np.cos(ay), np.sin(ay)
    cz, sz = np.cos(az), np.sin(az)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return rz @ ry @ rx


def rotmat_to_euler(R, convention="zyx"):
    """Inverse of euler_to_rotmat; gimbal lock resolved by zeroing the x angle."""
    _check_convention(convention)
    sy = -float(R[2, 0])
    sy = min(1.0, max(-1.0, sy))
    ay = np.arcsin(sy)
    if min(abs(ay - np.pi / 2), abs(ay + np.pi / 2)) < GIMBAL_EPS:
        ax = 0.0
        if ay > 0:
            az = np.arctan2(-R[0, 1], R[0, 2])
        else:
            az = np.arctan2(-R[0, 1], -R[0, 2])
    else:
        ax = np.arctan2(R[2, 1], R[2, 2])
        az = np.arctan2(R[1, 0], R[0, 0])
    return np.array([normalize_angle(ax), normalize_angle(ay), normalize_angle(az)])


def _validate_rotation(R, atol=ROTATION_ATOL):
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise ShapeError(f"rotation matrix must be 3x3, got {R.shape}")
    err = np.max(np.abs(R.T @ R - np.eye(3)))
    det = np.linalg.det(R)
    if err > atol or abs(det - 1.0) > atol:
        raise ValueError(
            f"not a rotation matrix: |R^T R - I| = {err:.3e}, det = {det:.12f}"
        )
    return R


def expmap_to_rotmat(v):
    """Rodrigues formula; small angles take a second-order Taylor branch."""
    v = np.asarray(v, dtype=np.float64)
    theta = float(np.linalg.norm(v))
    K = skew(v)
    if theta < 1e-8:
        return np.eye(3) + K + 0.5 * (K @ K)
    K = K / theta
    return np.eye(3) + np.sin(theta) * K + (1.0 - np.cos(theta)) * (K @ K)


def rotmat_to_expmap(R):
    """Inverse Rodrigues; angle in [0, pi] so the result is already canonical.

    The angle comes from atan2(|skew part|/2, (trace-1)/2), which equals
    arccos((trace-1)/2) for a rotation matrix but stays well conditioned at
    both ends; the half-turn neighbourhood takes the symmetric-part branch.
    """
    R = _validate_rotation(R)
    cos_theta = min(1.0, max(-1.0, (np.trace(R) - 1.0) / 2.0))
    skew_vec = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    sin_theta = 0.5 * float(np.linalg.norm(skew_vec))
    theta = float(np.arctan2(sin_theta, cos_theta))
    if cos_theta > 0.0 and theta < 1e-8:
        # theta ~ 0: theta/(2 sin theta) -> (1 + theta^2/6)/2
        return 0.5 * (1.0 + theta * theta / 6.0) * skew_vec
    if cos_theta > 0.0 or sin_theta > 1e-6:
        return (theta / (2.0 * sin_theta)) * skew_vec
    # theta ~ pi: R + I = 2 a a^T, recover the axis from the symmetric part
    B = 0.5 * (R + np.eye(3))
    k = int(np.argmax(np.diag(B)))
    axis = np.zeros(3)
    axis[k] = np.sqrt(max(B[k, k], 0.0))
    for i in range(3):
        if i != k:
            axis[i] = B[k, i] / axis[k]
    axis /= np.linalg.norm(axis)
    if sin_theta > 1e-12:
        # strictly below pi the skew part still carries the sign
        if float(skew_vec @ axis) < 0:
            axis = -axis
    else:
        # exactly pi is antipodally ambiguous: largest component positive
        j = int(np.argmax(np.abs(axis)))
        if axis[j] < 0:
            axis = -axis
    return theta * axis


def canonicalize_expmap(v):
    """Antipodal representative with norm at most pi."""
    v = np.asarray(v, dtype=np.float64)
    theta = float(np.linalg.norm(v))
    if theta <= np.pi:
        return v.copy()
    reduced = np.fmod(theta, 2.0 * np.pi)
    if reduced > np.pi:
        reduced -= 2.0 * np.pi
    return v * (reduced / theta)


def expmap_to_euler(v, convention="zyx"):
    return rotmat_to_euler(expmap_to_rotmat(v), convention)


def frame_euler_error(pred, truth, spec, joints=None):
    """Euclidean distance between two raw frames in normalized Euler space.

    Global joints (root translation / orientation) are excluded. ``joints``
    optionally restricts the sum to a subset of joint names, which is how
    per-group error breakdowns are produced.
    """
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    truth = np.asarray(truth, dtype=np.float64).reshape(-1)
    if pred.shape[0] != spec.total_dim or truth.shape[0] != spec.total_dim:
        raise ShapeError(
            f"frame widths {pred.shape[0]}/{truth.shape[0]} do not match "
            f"skeleton dimension {spec.total_dim}"
        )
    wanted = None if joints is None else set(joints)
    total = 0.0
    for joint in spec.joints:
        if joint.is_global:
            continue
        if wanted is not None and joint.name not in wanted:
            continue
        if joint.length != 3:
            raise ShapeError(
                f"joint {joint.name!r} has span {joint.length}, expected 3 "
                "for an exponential-map angle joint"
            )
        sl = slice(joint.start, joint.start + joint.length)
        ep = expmap_to_euler(pred[sl], spec.euler_convention)
        et = expmap_to_euler(truth[sl], spec.euler_convention)
        d = ep - et
        total += float(d @ d)
    return float(np.sqrt(total))
