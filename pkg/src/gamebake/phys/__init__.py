from .colliders import (
    BoxCollider,
    ConvexPiece,
    ConvexSetCollider,
    DecompositionConfig,
    SphereCollider,
    TriMeshCollider,
    collider_com,
    convex_decomposition,
    inertia_tensor,
    make_collider,
    pca_box,
    simplify_trimesh,
    welzl_sphere,
)
from .decompose import (
    BACKGROUND_LABEL,
    ParamTable,
    VoxelLabels,
    assign_params,
    extract_entity,
    inpaint_entity_texture,
    label_voxels,
)
from .raycast import RayHit, raycast
from .world import PhysicsWorld, RigidBody, SimulationError, SolverSettings, run_replay

__all__ = [
    "BACKGROUND_LABEL",
    "BoxCollider",
    "ConvexPiece",
    "ConvexSetCollider",
    "DecompositionConfig",
    "ParamTable",
    "PhysicsWorld",
    "RayHit",
    "RigidBody",
    "SimulationError",
    "SolverSettings",
    "SphereCollider",
    "TriMeshCollider",
    "VoxelLabels",
    "assign_params",
    "collider_com",
    "convex_decomposition",
    "extract_entity",
    "inertia_tensor",
    "inpaint_entity_texture",
    "label_voxels",
    "make_collider",
    "pca_box",
    "raycast",
    "run_replay",
    "simplify_trimesh",
    "welzl_sphere",
]
