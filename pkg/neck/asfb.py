"""
Adaptive Scale Fusion Block (ASFB): estratégia "refinar e depois fundir".

O nível profundo sobe com o CRU, o nível raso desce com o GAD, e os três
mapas, já à resolução do nível intermédio, são fundidos pelo AWF e
passam por uma convolução leve.
"""
from typing import Optional

import torch
import torch.nn as nn
import torch.nn.functional as F

from neck.awf import AdaptiveWeightedFuser, mean_fuse
from neck.cru import ContentReconstructionUpsampler
from neck.gad import GeometricAlignmentDownsampler
from neck.layers import ConvBNAct
from neck.pyramid import PyramidError, check_adjacent


class AdaptiveScaleFusionBlock(nn.Module):
    """
    Args:
        deep_channels: Canais do nível profundo (None no topo da pirâmide)
        mid_channels: Canais do nível intermédio (e da saída)
        shallow_channels: Canais do nível raso (None na base da pirâmide)
        use_cru: False → vizinho mais próximo em vez do CRU
        use_gad: False → convolução 3×3 de passo 2 em vez do GAD
        use_awf: False → média não ponderada em vez do AWF
    """

    def __init__(self, deep_channels: Optional[int], mid_channels: int,
                 shallow_channels: Optional[int],
                 use_cru: bool = True, use_gad: bool = True, use_awf: bool = True):
        super().__init__()
        self.has_deep = deep_channels is not None
        self.has_shallow = shallow_channels is not None
        self.use_cru = use_cru

        self.deep_align = None
        self.upsampler = None
        if self.has_deep:
            self.deep_align = nn.Conv2d(deep_channels, mid_channels, kernel_size=1)
            if use_cru:
                self.upsampler = ContentReconstructionUpsampler(mid_channels, scale=2)

        self.downsampler = None
        if self.has_shallow:
            if use_gad:
                self.downsampler = GeometricAlignmentDownsampler(shallow_channels, mid_channels)
            else:
                self.downsampler = nn.Conv2d(shallow_channels, mid_channels, 3, stride=2, padding=1)

        self.fuser = AdaptiveWeightedFuser() if use_awf else None
        self.out = ConvBNAct(mid_channels, mid_channels, kernel_size=3)

    def upsample_deep(self, p_deep: torch.Tensor) -> torch.Tensor:
        aligned = self.deep_align(p_deep)
        if self.upsampler is not None:
            return self.upsampler(aligned)
        return F.interpolate(aligned, scale_factor=2, mode='nearest')

    def forward(self, p_deep: Optional[torch.Tensor], p_mid: torch.Tensor,
                p_shallow: Optional[torch.Tensor]) -> torch.Tensor:
        if (p_deep is not None) != self.has_deep or (p_shallow is not None) != self.has_shallow:
            raise PyramidError("entradas do ASFB não correspondem aos níveis configurados")

        f_deep = None
        if p_deep is not None:
            check_adjacent(p_deep, p_mid, 'deep/mid')
            f_deep = self.upsample_deep(p_deep)
        f_shallow = None
        if p_shallow is not None:
            check_adjacent(p_mid, p_shallow, 'mid/shallow')
            f_shallow = self.downsampler(p_shallow)

        if self.fuser is not None:
            fused = self.fuser(f_deep, p_mid, f_shallow)
        else:
            fused = mean_fuse(f_deep, p_mid, f_shallow)
        return self.out(fused)
