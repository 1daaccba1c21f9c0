from .marching import DEFAULT_DENSITY_THRESHOLD, extract_mesh, sample_density_lattice
from .mesh import (
    EmptyMeshError,
    PostprocessConfig,
    TriangleMesh,
    postprocess_mesh,
    weld_vertices,
)
from .raster import GBuffer, pixel_view_dirs, rasterize_mesh
from .texture import (
    BakeConfig,
    NeuralTexture,
    baked_psnr,
    fit_texture,
    init_texture,
    make_shader,
    nerf_depth_maps,
    render_baked,
    shade,
    texel_surface_table,
)
from .unwrap import UnwrapConfig, uv_unwrap

__all__ = [
    "BakeConfig",
    "DEFAULT_DENSITY_THRESHOLD",
    "EmptyMeshError",
    "GBuffer",
    "NeuralTexture",
    "PostprocessConfig",
    "TriangleMesh",
    "UnwrapConfig",
    "baked_psnr",
    "extract_mesh",
    "fit_texture",
    "init_texture",
    "make_shader",
    "nerf_depth_maps",
    "pixel_view_dirs",
    "postprocess_mesh",
    "rasterize_mesh",
    "render_baked",
    "sample_density_lattice",
    "shade",
    "texel_surface_table",
    "uv_unwrap",
    "weld_vertices",
]
