"""
Backbones do detetor: fluxo duplo RGB/IR com fusão por escala, e fluxo
único (configuração HFAN-YOLO).

Cada fluxo tem um stem de passo 2 e quatro estágios de passo 2, pelo que
o nível l tem resolução img_size / 2^l.
"""
import logging
from typing import Callable, Dict, Optional

import torch
import torch.nn as nn

from neck.layers import ConvBNAct
from neck.pyramid import PYRAMID_LEVELS, FeaturePyramid


logger = logging.getLogger(__name__)

FusionBuilder = Callable[[int], nn.Module]


class BackboneInputError(ValueError):
    """Imagens RGB e IR não registadas ou com formato inválido."""


def as_three_channels(image: torch.Tensor) -> torch.Tensor:
    """IR de um canal é replicado para 3 canais."""
    if image.dim() != 4:
        raise BackboneInputError(f"imagem tem de ser (B, C, H, W), recebido {tuple(image.shape)}")
    if image.shape[1] == 1:
        return image.expand(-1, 3, -1, -1)
    if image.shape[1] != 3:
        raise BackboneInputError(f"imagem com {image.shape[1]} canais, esperado 1 ou 3")
    return image


class ConvStream(nn.Module):
    """Stem + quatro estágios convolucionais → {2: C_2, ..., 5: C_5}."""

    def __init__(self, channels: Dict[int, int], in_channels: int = 3):
        super().__init__()
        stem_channels = max(channels[PYRAMID_LEVELS[0]] // 2, 4)
        self.stem = ConvBNAct(in_channels, stem_channels, kernel_size=3, stride=2)
        stages = {}
        previous = stem_channels
        for level in PYRAMID_LEVELS:
            stages[str(level)] = nn.Sequential(
                ConvBNAct(previous, channels[level], kernel_size=3, stride=2),
                ConvBNAct(channels[level], channels[level], kernel_size=3),
            )
            previous = channels[level]
        self.stages = nn.ModuleDict(stages)

    def forward(self, image: torch.Tensor) -> FeaturePyramid:
        x = self.stem(image)
        pyramid: FeaturePyramid = {}
        for level in PYRAMID_LEVELS:
            x = self.stages[str(level)](x)
            pyramid[level] = x
        return pyramid


class DualStreamBackbone(nn.Module):
    """
    Dois fluxos com pesos próprios; em cada nível, C_rgb e C_ir são fundidos
    pelo módulo devolvido por fusion_builder(level).
    """

    def __init__(self, channels: Dict[int, int], fusion_builder: FusionBuilder):
        super().__init__()
        self.rgb_stream = ConvStream(channels)
        self.ir_stream = ConvStream(channels)
        self.fusion = nn.ModuleDict({
            str(level): fusion_builder(level) for level in PYRAMID_LEVELS
        })

    def forward(self, rgb: torch.Tensor, ir: Optional[torch.Tensor]) -> FeaturePyramid:
        if ir is None:
            raise BackboneInputError("backbone de fluxo duplo precisa da imagem IR")
        if rgb.shape[0] != ir.shape[0] or rgb.shape[-2:] != ir.shape[-2:]:
            raise BackboneInputError(
                f"RGB {tuple(rgb.shape)} e IR {tuple(ir.shape)} não estão registadas"
            )
        c_rgb = self.rgb_stream(as_three_channels(rgb))
        c_ir = self.ir_stream(as_three_channels(ir))
        return {
            level: self.fusion[str(level)](c_rgb[level], c_ir[level])
            for level in PYRAMID_LEVELS
        }

    def gate_summary(self) -> Dict[int, Dict[str, float]]:
        """Médias dos gates do último forward, por nível (vazio sem gates)."""
        summary = {}
        for level in PYRAMID_LEVELS:
            gates = getattr(self.fusion[str(level)], 'last_gates', None)
            if gates is not None:
                summary[level] = gates.to_dict()
        return summary


class SingleStreamBackbone(nn.Module):
    """Fluxo RGB apenas; a imagem IR é ignorada."""

    def __init__(self, channels: Dict[int, int]):
        super().__init__()
        self.rgb_stream = ConvStream(channels)

    def forward(self, rgb: torch.Tensor, ir: Optional[torch.Tensor] = None) -> FeaturePyramid:
        return self.rgb_stream(as_three_channels(rgb))

    def gate_summary(self) -> Dict[int, Dict[str, float]]:
        return {}
