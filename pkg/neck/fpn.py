"""
Pescoço FPN de referência: descida com vizinho mais próximo, subida com
convolução de passo 2, fusão por soma simples.
"""
from typing import Dict

import torch.nn as nn
import torch.nn.functional as F

from neck.layers import ConvBNAct
from neck.pyramid import PYRAMID_LEVELS, FeaturePyramid, check_pyramid


class FeaturePyramidNeck(nn.Module):
    """Duas passagens (descendente e ascendente) com as larguras de entrada."""

    def __init__(self, channels: Dict[int, int]):
        super().__init__()
        self.levels = PYRAMID_LEVELS
        self.lateral = nn.ModuleDict({
            str(level): nn.Conv2d(channels[level + 1], channels[level], kernel_size=1)
            for level in self.levels[:-1]
        })
        self.downsample = nn.ModuleDict({
            str(level): nn.Conv2d(channels[level - 1], channels[level], 3, stride=2, padding=1)
            for level in self.levels[1:]
        })
        self.smooth = nn.ModuleDict({
            str(level): ConvBNAct(channels[level], channels[level]) for level in self.levels
        })

    def forward(self, pyramid: FeaturePyramid) -> FeaturePyramid:
        check_pyramid(pyramid, self.levels)

        td: FeaturePyramid = {self.levels[-1]: pyramid[self.levels[-1]]}
        for level in reversed(self.levels[:-1]):
            up = F.interpolate(td[level + 1], scale_factor=2, mode='nearest')
            td[level] = pyramid[level] + self.lateral[str(level)](up)

        out: FeaturePyramid = {self.levels[0]: td[self.levels[0]]}
        for level in self.levels[1:]:
            out[level] = td[level] + self.downsample[str(level)](out[level - 1])
        return {level: self.smooth[str(level)](out[level]) for level in self.levels}
