"""
Cabeças de deteção desacopladas, sem âncoras, uma por nível da pirâmide.

Por célula: K logits de classe e 4 distâncias (l, t, r, b) do centro da
célula aos lados da caixa, em unidades de célula. As distâncias saem de
uma softplus, sempre positivas.
"""
import math
from dataclasses import dataclass
from typing import Dict, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from neck.pyramid import PYRAMID_LEVELS, FeaturePyramid, PyramidError


# Prior de classe ≈ 0.01 no início do treino
CLS_BIAS_INIT = -4.6
# softplus(bias) = 1 célula no início do treino
BOX_BIAS_INIT = math.log(math.expm1(1.0))


@dataclass
class HeadOutput:
    """
    Attributes:
        cls_logits: nível → (B, K, H_l, W_l)
        box_regs: nível → (B, 4, H_l, W_l)
    """
    cls_logits: Dict[int, torch.Tensor]
    box_regs: Dict[int, torch.Tensor]

    def __post_init__(self) -> None:
        if set(self.cls_logits) != set(self.box_regs):
            raise PyramidError("cls_logits e box_regs cobrem níveis diferentes")

    @property
    def levels(self) -> Tuple[int, ...]:
        return tuple(sorted(self.cls_logits))

    @property
    def batch_size(self) -> int:
        return next(iter(self.cls_logits.values())).shape[0]

    @property
    def num_classes(self) -> int:
        return next(iter(self.cls_logits.values())).shape[1]

    def shapes(self) -> Dict[int, Tuple[Tuple[int, ...], Tuple[int, ...]]]:
        return {level: (tuple(self.cls_logits[level].shape), tuple(self.box_regs[level].shape))
                for level in self.levels}


def _branch(channels: int, out_channels: int, bias_init: float) -> nn.Sequential:
    final = nn.Conv2d(channels, out_channels, kernel_size=1)
    nn.init.constant_(final.bias, bias_init)
    return nn.Sequential(
        nn.Conv2d(channels, channels, kernel_size=3, padding=1),
        nn.SiLU(),
        final,
    )


class DecoupledHead(nn.Module):
    """
    Args:
        channels: Canais por nível
        num_classes: K
        use_p2_head: False → três cabeças (P3–P5)
    """

    def __init__(self, channels: Dict[int, int], num_classes: int, use_p2_head: bool = True):
        super().__init__()
        self.levels = PYRAMID_LEVELS if use_p2_head else PYRAMID_LEVELS[1:]
        self.num_classes = num_classes
        self.cls_branches = nn.ModuleDict({
            str(level): _branch(channels[level], num_classes, CLS_BIAS_INIT)
            for level in self.levels
        })
        self.box_branches = nn.ModuleDict({
            str(level): _branch(channels[level], 4, BOX_BIAS_INIT)
            for level in self.levels
        })

    def forward(self, pyramid: FeaturePyramid) -> HeadOutput:
        missing = [level for level in PYRAMID_LEVELS if level not in pyramid]
        if missing:
            raise PyramidError(f"níveis em falta na cabeça de deteção: {missing}")
        return HeadOutput(
            cls_logits={level: self.cls_branches[str(level)](pyramid[level]) for level in self.levels},
            box_regs={level: F.softplus(self.box_branches[str(level)](pyramid[level]))
                      for level in self.levels},
        )
