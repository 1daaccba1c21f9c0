"""Software rasterization into a G-buffer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import kernels


@dataclass
class GBuffer:
    face_id: np.ndarray  # (H,W) int32, -1 = miss
    bary: np.ndarray  # (H,W,3) perspective-correct
    depth: np.ndarray  # (H,W) distance along the camera ray, inf = miss
    uv: np.ndarray | None  # (H,W,2)
    position: np.ndarray  # (H,W,3) world-space surface points (0 at misses)
    jitter: tuple

    @property
    def mask(self):
        return self.face_id >= 0


def rasterize_mesh(mesh, cam, jitter=(0.0, 0.0)) -> GBuffer:
    """Render face ids / barycentrics / depth for one camera.

    `jitter` shifts the optical center exactly like `camera_ray` does, so a
    rasterized pixel and the volume renderer's jittered ray see the same
    geometry.
    """
    rot = cam.rotation
    verts_cam = (mesh.vertices - cam.translation) @ rot  # R^T (x - t)
    faces = np.ascontiguousarray(mesh.faces, dtype=np.int64)
    ju, jv = jitter
    face_id, bary, _ = kernels.rasterize(
        np.ascontiguousarray(verts_cam), faces,
        cam.fx, cam.fy, cam.cx - ju, cam.cy - jv, cam.width, cam.height,
    )
    hit = face_id >= 0
    position = np.zeros((cam.height, cam.width, 3))
    depth = np.full((cam.height, cam.width), np.inf)
    uv = None
    if hit.any():
        f = face_id[hit]
        b = bary[hit]
        corners = mesh.vertices[mesh.faces[f]]  # (N,3,3)
        pos = (corners * b[..., None]).sum(axis=1)
        position[hit] = pos
        depth[hit] = np.linalg.norm(pos - cam.translation, axis=-1)
    if mesh.uvs is not None:
        uv = np.zeros((cam.height, cam.width, 2))
        if hit.any():
            uvc = mesh.uvs[mesh.faces[face_id[hit]]]
            uv[hit] = (uvc * bary[hit][..., None]).sum(axis=1)
    return GBuffer(face_id=face_id, bary=bary, depth=depth, uv=uv,
                   position=position, jitter=(ju, jv))


def pixel_view_dirs(cam, jitter=(0.0, 0.0)) -> np.ndarray:
    """(H,W,3) unit view directions for every pixel (matching the jitter)."""
    from ..scene.camera import all_pixel_grid

    pixels = all_pixel_grid(cam.width, cam.height)
    d = cam.pixel_directions(pixels, np.asarray(jitter))
    return d.reshape(cam.height, cam.width, 3)
