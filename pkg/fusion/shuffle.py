"""
Fusion-Shuffle: convolução de grupos por fluxo, baralhamento de canais e soma.
"""
import torch
import torch.nn as nn
from einops import rearrange

from fusion.gates import FusionShapeError, check_same_shape


def channel_shuffle(x: torch.Tensor, groups: int) -> torch.Tensor:
    """Intercala os canais de g grupos: g=2, C=4 → ordem (0, 2, 1, 3)."""
    channels = x.shape[1]
    if channels % groups != 0:
        raise FusionShapeError(f"groups={groups} não divide C={channels}")
    return rearrange(x, 'b (g c) h w -> b (c g) h w', g=groups)


def inverse_channel_shuffle(x: torch.Tensor, groups: int) -> torch.Tensor:
    """Inversa de channel_shuffle(x, groups)."""
    return channel_shuffle(x, x.shape[1] // groups)


class FusionShuffle(nn.Module):
    """
    Conv3×3 de g grupos em cada fluxo, baralhamento com g grupos e soma.

    Raises:
        FusionShapeError: g não divide C (na construção)
    """

    def __init__(self, channels: int, groups: int):
        super().__init__()
        if groups < 1 or channels % groups != 0:
            raise FusionShapeError(f"shuffle_groups={groups} não divide channels={channels}")
        self.groups = groups
        self.rgb_conv = nn.Conv2d(channels, channels, 3, padding=1, groups=groups)
        self.ir_conv = nn.Conv2d(channels, channels, 3, padding=1, groups=groups)

    def forward(self, f_rgb_out: torch.Tensor, f_ir_out: torch.Tensor) -> torch.Tensor:
        check_same_shape(f_rgb_out, f_ir_out)
        rgb = channel_shuffle(self.rgb_conv(f_rgb_out), self.groups)
        ir = channel_shuffle(self.ir_conv(f_ir_out), self.groups)
        return rgb + ir
