from .blocks import BlockLayout, partition_blocks
from .losses import LossWeights, depth_align, total_loss
from .model import FieldConfig, RadianceField
from .render import RenderResult, RenderSettings, composite, render_image, render_rays, sample_along_ray
from .train import TrainConfig, build_ray_bank, evaluate_psnr, split_train_val, train

__all__ = [
    "BlockLayout",
    "FieldConfig",
    "LossWeights",
    "RadianceField",
    "RenderResult",
    "RenderSettings",
    "TrainConfig",
    "build_ray_bank",
    "composite",
    "depth_align",
    "evaluate_psnr",
    "partition_blocks",
    "render_image",
    "render_rays",
    "sample_along_ray",
    "split_train_val",
    "total_loss",
    "train",
]
