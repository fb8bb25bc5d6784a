"""
Gates do DGC-MFM: Illumination Gate, Difference Gate e a fusão com dois gates.
"""
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F


class FusionShapeError(ValueError):
    """Mapas ou gates com formas incompatíveis."""


def check_same_shape(f_rgb: torch.Tensor, f_ir: torch.Tensor) -> None:
    if f_rgb.shape != f_ir.shape:
        raise FusionShapeError(
            f"mapas RGB {tuple(f_rgb.shape)} e IR {tuple(f_ir.shape)} têm formas diferentes"
        )
    if f_rgb.dim() != 4:
        raise FusionShapeError(f"mapa tem de ser (B, C, H, W), recebido {tuple(f_rgb.shape)}")


@dataclass
class GateOutputs:
    """
    Pesos produzidos pelos gates para um lote.

    Attributes:
        w_light: (B,) em (0, 1)
        w_diff_rgb: (B, C) em (0, 1)
        w_diff_ir: (B, C) em (0, 1)
        a_diff: (B, C), linhas somam 1
    """
    w_light: torch.Tensor
    w_diff_rgb: torch.Tensor
    w_diff_ir: torch.Tensor
    a_diff: torch.Tensor

    def detach(self) -> 'GateOutputs':
        return GateOutputs(*(t.detach() for t in (self.w_light, self.w_diff_rgb,
                                                   self.w_diff_ir, self.a_diff)))

    def to_dict(self) -> Dict[str, float]:
        """Resumo escalar (médias do lote) para relatórios."""
        return {
            'w_light': float(self.w_light.mean()),
            'w_diff_rgb': float(self.w_diff_rgb.mean()),
            'w_diff_ir': float(self.w_diff_ir.mean()),
            'a_diff_max': float(self.a_diff.max(dim=1).values.mean()),
        }


class IlluminationGate(nn.Module):
    """
    W_light = σ(γ·(L_rgb − L_ir)), L_m = GAP(Conv(F_m)).

    A convolução 3×3 de um canal é partilhada pelas duas modalidades para
    que as estimativas de brilho sejam comparáveis.
    """

    def __init__(self, channels: int, gamma_init: float = 1.0):
        super().__init__()
        self.brightness_conv = nn.Conv2d(channels, 1, kernel_size=3, padding=1)
        self.gamma = nn.Parameter(torch.tensor(float(gamma_init)))

    def brightness(self, feature_map: torch.Tensor) -> torch.Tensor:
        """L_m por amostra, forma (B,)."""
        return self.brightness_conv(feature_map).mean(dim=(1, 2, 3))

    def forward(self, f_rgb: torch.Tensor, f_ir: torch.Tensor) -> torch.Tensor:
        check_same_shape(f_rgb, f_ir)
        return torch.sigmoid(self.gamma * (self.brightness(f_rgb) - self.brightness(f_ir)))


class DifferenceGate(nn.Module):
    """
    A_diff = Softmax(W_2·δ(W_1·GAP(|F_rgb − F_ir|))), δ = ReLU.

    Os pesos por modalidade saem de duas projeções lineares C → C sobre
    A_diff, cada uma seguida de sigmoide.
    """

    def __init__(self, channels: int, bottleneck: Optional[int] = None):
        super().__init__()
        hidden = bottleneck if bottleneck is not None else max(channels // 4, 4)
        self.channels = channels
        self.squeeze = nn.Linear(channels, hidden)
        self.excite = nn.Linear(hidden, channels)
        self.rgb_head = nn.Linear(channels, channels)
        self.ir_head = nn.Linear(channels, channels)

    def channel_attention(self, f_rgb: torch.Tensor, f_ir: torch.Tensor) -> torch.Tensor:
        f_diff = torch.abs(f_rgb - f_ir)
        pooled = f_diff.mean(dim=(2, 3))
        return torch.softmax(self.excite(F.relu(self.squeeze(pooled))), dim=1)

    def forward(self, f_rgb: torch.Tensor,
                f_ir: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """
        Returns:
            (a_diff, w_diff_rgb, w_diff_ir), cada um (B, C)
        """
        check_same_shape(f_rgb, f_ir)
        if f_rgb.shape[1] != self.channels:
            raise FusionShapeError(
                f"mapas com {f_rgb.shape[1]} canais, Difference Gate espera {self.channels}"
            )
        a_diff = self.channel_attention(f_rgb, f_ir)
        return a_diff, torch.sigmoid(self.rgb_head(a_diff)), torch.sigmoid(self.ir_head(a_diff))


def dual_gated_fuse(f_rgb: torch.Tensor, f_ir: torch.Tensor, gates: GateOutputs) -> torch.Tensor:
    """
    F_fused = (W_light ⊗ W_diff-rgb) ⊙ F_rgb + ((1 − W_light) ⊗ W_diff-ir) ⊙ F_ir.

    Raises:
        FusionShapeError: Gates que não difundem para a forma dos mapas
    """
    check_same_shape(f_rgb, f_ir)
    batch, channels = f_rgb.shape[:2]
    if gates.w_light.shape != (batch,):
        raise FusionShapeError(f"w_light tem forma {tuple(gates.w_light.shape)}, esperado ({batch},)")
    for name in ('w_diff_rgb', 'w_diff_ir'):
        shape = tuple(getattr(gates, name).shape)
        if shape != (batch, channels):
            raise FusionShapeError(f"{name} tem forma {shape}, esperado ({batch}, {channels})")

    w_light = gates.w_light.view(batch, 1, 1, 1)
    w_rgb = gates.w_diff_rgb.view(batch, channels, 1, 1)
    w_ir = gates.w_diff_ir.view(batch, channels, 1, 1)
    return (w_light * w_rgb) * f_rgb + ((1.0 - w_light) * w_ir) * f_ir
