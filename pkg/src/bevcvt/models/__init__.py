from .cvt import CrossViewTransformer, CvtConfig
from .unet import UNet, UnetConfig
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "CrossViewTransformer",
    "CvtConfig",
    "UNet",
    "UnetConfig",
    "load_checkpoint",
    "save_checkpoint",
]
