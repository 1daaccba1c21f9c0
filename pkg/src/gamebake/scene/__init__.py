from .camera import CameraModel, all_pixel_grid, camera_ray
from .dataset import FrameRecord, SceneDataset, SceneValidationError, load_scene, save_scene
from .synth import (
    SynthConfig,
    SynthGeometry,
    default_geometry,
    load_geometry,
    orbit_cameras,
    render_frame,
    save_geometry,
    synth_scene,
)

__all__ = [
    "CameraModel",
    "FrameRecord",
    "SceneDataset",
    "SceneValidationError",
    "SynthConfig",
    "SynthGeometry",
    "all_pixel_grid",
    "camera_ray",
    "default_geometry",
    "load_geometry",
    "load_scene",
    "orbit_cameras",
    "render_frame",
    "save_geometry",
    "save_scene",
    "synth_scene",
]
