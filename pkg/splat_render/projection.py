"""EWA projection of 3D Gaussians into screen-space splats."""

from dataclasses import dataclass

import numpy as np

from gs_model.models import GaussianPrimitive
from splat_render.models import COVARIANCE_BLUR, Camera, Splat2D


def quaternion_to_rotation(q: np.ndarray) -> np.ndarray:
    """Rotation matrices ``(N, 3, 3)`` from ``(w, x, y, z)`` quaternions."""
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    q = q / np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    rot = np.empty((len(q), 3, 3))
    rot[:, 0, 0] = 1 - 2 * (y * y + z * z)
    rot[:, 0, 1] = 2 * (x * y - w * z)
    rot[:, 0, 2] = 2 * (x * z + w * y)
    rot[:, 1, 0] = 2 * (x * y + w * z)
    rot[:, 1, 1] = 1 - 2 * (x * x + z * z)
    rot[:, 1, 2] = 2 * (y * z - w * x)
    rot[:, 2, 0] = 2 * (x * z - w * y)
    rot[:, 2, 1] = 2 * (y * z + w * x)
    rot[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return rot


def covariance_3d(rotations: np.ndarray, log_scales: np.ndarray) -> np.ndarray:
    m = quaternion_to_rotation(rotations) * np.exp(np.atleast_2d(np.asarray(log_scales, dtype=np.float64)))[:, None, :]
    return m @ m.transpose(0, 2, 1)


@dataclass(frozen=True)
class Projection:
    """Splats that survive culling, in primitive order."""

    indices: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    conics: np.ndarray
    depths: np.ndarray
    radii: np.ndarray
    # inclusive pixel rectangles (x0, y0, x1, y1)
    rects: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def splat(self, k: int) -> Splat2D:
        return Splat2D(
            self.means[k], self.covs[k], self.conics[k], float(self.depths[k]), tuple(int(v) for v in self.rects[k]), int(self.radii[k]), int(self.indices[k])
        )


def project(positions: np.ndarray, rotations: np.ndarray, log_scales: np.ndarray, cam: Camera) -> Projection:
    positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    p_cam = positions @ cam.rotation.T + cam.translation
    in_front = np.flatnonzero(p_cam[:, 2] > cam.near)
    x, y, z = p_cam[in_front, 0], p_cam[in_front, 1], p_cam[in_front, 2]

    jac = np.zeros((len(in_front), 2, 3))
    jac[:, 0, 0] = cam.fx / z
    jac[:, 0, 2] = -cam.fx * x / (z * z)
    jac[:, 1, 1] = cam.fy / z
    jac[:, 1, 2] = -cam.fy * y / (z * z)
    t = jac @ cam.rotation
    sigma = covariance_3d(np.atleast_2d(rotations)[in_front], np.atleast_2d(log_scales)[in_front])
    covs = t @ sigma @ t.transpose(0, 2, 1) + COVARIANCE_BLUR * np.eye(2)

    a, b, c = covs[:, 0, 0], covs[:, 0, 1], covs[:, 1, 1]
    det = a * c - b * b
    conics = np.stack([np.stack([c, -b], axis=1), np.stack([-b, a], axis=1)], axis=1) / det[:, None, None]
    mid = 0.5 * (a + c)
    largest = mid + np.sqrt(np.maximum(mid * mid - det, 0.0))
    radii = np.ceil(3.0 * np.sqrt(largest)).astype(np.int64)

    means = np.stack([cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy], axis=1)
    rects = np.stack(
        [
            np.maximum(np.ceil(means[:, 0] - radii), 0),
            np.maximum(np.ceil(means[:, 1] - radii), 0),
            np.minimum(np.floor(means[:, 0] + radii), cam.width - 1),
            np.minimum(np.floor(means[:, 1] + radii), cam.height - 1),
        ],
        axis=1,
    ).astype(np.int64)
    # the footprint misses the image when its clipped rectangle is empty
    keep = (rects[:, 0] <= rects[:, 2]) & (rects[:, 1] <= rects[:, 3])
    return Projection(in_front[keep], means[keep], covs[keep], conics[keep], z[keep], radii[keep], rects[keep])


def project_gaussian(p: GaussianPrimitive, cam: Camera) -> Splat2D | None:
    """Screen-space splat of one primitive, or None when it is culled."""
    projection = project(p.position[None], p.rotation[None], p.log_scale[None], cam)
    return projection.splat(0) if len(projection) else None
