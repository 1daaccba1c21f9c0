"""Pinhole camera model.

Convention (inherited by every other module): right-handed world, camera
looks down +z in its own frame, pose is the world-from-camera transform
(x_world = R @ x_cam + t), pixel (u, v) samples at (u + 0.5, v + 0.5).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import Ray, normalized


@dataclass
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray  # (3,3) world-from-camera
    translation: np.ndarray  # (3,) camera center, world units

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64)
        self.translation = np.asarray(self.translation, dtype=np.float64)
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        err = np.abs(self.rotation @ self.rotation.T - np.eye(3)).max()
        if err > 1e-6:
            raise ValueError(f"rotation not orthonormal (err {err:.2e})")

    @property
    def pose_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    @classmethod
    def from_pose_matrix(cls, fx, fy, cx, cy, width, height, pose16):
        m = np.asarray(pose16, dtype=np.float64).reshape(4, 4)
        return cls(fx, fy, cx, cy, width, height, m[:3, :3], m[:3, 3])

    @classmethod
    def look_at(cls, eye, target, up, fx, fy, cx, cy, width, height):
        """World-from-camera pose with +z toward `target`, +y screen-down."""
        eye = np.asarray(eye, dtype=np.float64)
        fwd = normalized(np.asarray(target, dtype=np.float64) - eye)
        right = normalized(np.cross(fwd, normalized(up)))
        down = np.cross(fwd, right)
        rot = np.stack([right, down, fwd], axis=1)
        return cls(fx, fy, cx, cy, width, height, rot, eye)

    def pixel_directions(self, pixels: np.ndarray, jitter=None) -> np.ndarray:
        """World-space unit directions for integer pixel coords (N, 2)."""
        pixels = np.atleast_2d(np.asarray(pixels, dtype=np.float64))
        j = np.zeros_like(pixels) if jitter is None else np.broadcast_to(
            np.asarray(jitter, dtype=np.float64), pixels.shape
        )
        x = (pixels[:, 0] + 0.5 + j[:, 0] - self.cx) / self.fx
        y = (pixels[:, 1] + 0.5 + j[:, 1] - self.cy) / self.fy
        d_cam = np.stack([x, y, np.ones_like(x)], axis=1)
        return normalized(d_cam @ self.rotation.T)


def camera_ray(cam: CameraModel, pixel, jitter=(0.0, 0.0), near=0.05, far=20.0) -> Ray:
    u, v = pixel
    if not (0 <= u < cam.width and 0 <= v < cam.height):
        raise ValueError(f"pixel {pixel} outside {cam.width}x{cam.height}")
    d = cam.pixel_directions(np.array([[u, v]]), np.asarray(jitter))[0]
    return Ray(cam.translation.copy(), d, near, far)


def all_pixel_grid(width: int, height: int) -> np.ndarray:
    """(H*W, 2) integer pixel coordinates, row-major."""
    u, v = np.meshgrid(np.arange(width), np.arange(height))
    return np.stack([u.ravel(), v.ravel()], axis=1)
