"""gamebake: posed images in, playable physics-enabled 3D scene out."""

__version__ = "0.1.0"
