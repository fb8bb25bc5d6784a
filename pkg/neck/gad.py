"""
Geometric Alignment Downsampler (GAD): convolução deformável modulada com
passo 2.

    F_out(p_0) = Σ_{p_n ∈ R} w(p_n) · F_in(p_0 + p_n + Δp_n) · m_n

Amostragem bilinear em posições fracionárias, zero fora da imagem.
"""
from dataclasses import dataclass
from typing import Optional

import torch
import torch.nn as nn
from torchvision.ops import deform_conv2d

from neck.pyramid import PyramidError
from ssm.scan import require_finite


GRID_SIZE = 3


@dataclass(frozen=True)
class DeformableSamplingField:
    """
    Deslocamentos e modulação por ponto da grelha 3×3.

    Attributes:
        offsets: (B, 2·9, H_out, W_out), pares (Δy, Δx) por ponto da grelha
        modulation: (B, 9, H_out, W_out) em [0, 1]
    """
    offsets: torch.Tensor
    modulation: torch.Tensor

    def __post_init__(self) -> None:
        require_finite('offsets', self.offsets)
        points = GRID_SIZE * GRID_SIZE
        if self.offsets.shape[1] != 2 * points or self.modulation.shape[1] != points:
            raise PyramidError(
                f"campo deformável com {self.offsets.shape[1]} deslocamentos e "
                f"{self.modulation.shape[1]} moduladores, esperado {2 * points} e {points}"
            )

    @classmethod
    def from_logits(cls, offsets: torch.Tensor,
                    modulation_logits: torch.Tensor) -> 'DeformableSamplingField':
        return cls(offsets, torch.sigmoid(modulation_logits))


def deformable_sample_conv(f_in: torch.Tensor, field: DeformableSamplingField,
                           weight: torch.Tensor, bias: Optional[torch.Tensor],
                           stride: int = 2) -> torch.Tensor:
    """Convolução 3×3 (padding 1) sobre as posições deformadas; saída ceil(H/stride)."""
    if stride < 2:
        raise PyramidError(f"stride tem de ser >= 2, recebido {stride}")
    return deform_conv2d(f_in, field.offsets, weight, bias,
                         stride=stride, padding=GRID_SIZE // 2, mask=field.modulation)


def gad_downsample(f_in: torch.Tensor, offsets: torch.Tensor, modulation_logits: torch.Tensor,
                   weight: torch.Tensor, bias: Optional[torch.Tensor] = None,
                   stride: int = 2) -> torch.Tensor:
    """
    Forma funcional: modulação por sigmoide e convolução deformável.

    Raises:
        NonFiniteError: Deslocamentos com NaN/inf
    """
    field = DeformableSamplingField.from_logits(offsets, modulation_logits)
    return deformable_sample_conv(f_in, field, weight, bias, stride)


class GeometricAlignmentDownsampler(nn.Module):
    """
    Deslocamentos e modulação previstos por convoluções 3×3 com o mesmo passo;
    ambas começam a zero (grelha regular, m = 0.5).
    """

    def __init__(self, in_channels: int, out_channels: int, stride: int = 2):
        super().__init__()
        points = GRID_SIZE * GRID_SIZE
        self.stride = stride
        self.offset_conv = nn.Conv2d(in_channels, 2 * points, GRID_SIZE,
                                     stride=stride, padding=GRID_SIZE // 2)
        self.modulator_conv = nn.Conv2d(in_channels, points, GRID_SIZE,
                                        stride=stride, padding=GRID_SIZE // 2)
        nn.init.zeros_(self.offset_conv.weight)
        nn.init.zeros_(self.offset_conv.bias)
        nn.init.zeros_(self.modulator_conv.weight)
        nn.init.zeros_(self.modulator_conv.bias)

        self.weight = nn.Parameter(torch.empty(out_channels, in_channels, GRID_SIZE, GRID_SIZE))
        self.bias = nn.Parameter(torch.zeros(out_channels))
        nn.init.kaiming_uniform_(self.weight, a=5 ** 0.5)

    def sampling_field(self, f_in: torch.Tensor) -> DeformableSamplingField:
        return DeformableSamplingField.from_logits(self.offset_conv(f_in), self.modulator_conv(f_in))

    def forward(self, f_in: torch.Tensor) -> torch.Tensor:
        return deformable_sample_conv(f_in, self.sampling_field(f_in), self.weight, self.bias,
                                      self.stride)
