"""
Dual-Gated Complementary Mamba Fusion Module (DGC-MFM) e a fusão por
concatenação usada como referência na ablação.

Quatro etapas: gates → fusão com dois gates → refinamento Mamba
bidirecional → integração residual e Fusion-Shuffle.
"""
from typing import Optional, Tuple

import torch
import torch.nn as nn

from config.settings import FusionScaleConfig
from fusion.gates import (
    DifferenceGate,
    GateOutputs,
    IlluminationGate,
    check_same_shape,
    dual_gated_fuse,
)
from fusion.shuffle import FusionShuffle
from ssm import BidirectionalMambaBlock, TokenSequence, require_finite, selective_scan


def residual_integrate(f_m: torch.Tensor, f_m_refined: torch.Tensor) -> torch.Tensor:
    """F_out_m = F_m + F'_m."""
    check_same_shape(f_m, f_m_refined)
    return f_m + f_m_refined


class DGCMFM(nn.Module):
    """
    Módulo de fusão RGB/IR de uma escala.

    Com cfg.gated=False os gates são substituídos pela média das duas
    modalidades (w_light = 0.5, w_diff ≡ 1), o que dá as linhas
    Uni-Mamba / Bi-Mamba da ablação.

    Attributes:
        last_gates: GateOutputs do último forward (desligados do grafo),
            ou None se o módulo não usa gates
    """

    def __init__(self, cfg: FusionScaleConfig):
        super().__init__()
        self.cfg = cfg
        channels = cfg.channels

        self.illumination_gate = IlluminationGate(channels, cfg.gamma_init) if cfg.gated else None
        self.difference_gate = DifferenceGate(channels, cfg.resolved_bottleneck) if cfg.gated else None

        self.mamba = nn.ModuleList([
            BidirectionalMambaBlock(channels, cfg.state_dim,
                                    bidirectional=cfg.bidirectional,
                                    tie_directions=cfg.tie_directions)
            for _ in range(cfg.mamba_depth)
        ])
        self.refine_proj = nn.Conv2d(channels, 2 * channels, kernel_size=1)
        self.shuffle = FusionShuffle(channels, cfg.resolved_groups)
        self.last_gates: Optional[GateOutputs] = None

    def compute_gates(self, f_rgb: torch.Tensor, f_ir: torch.Tensor) -> GateOutputs:
        batch, channels = f_rgb.shape[:2]
        if not self.cfg.gated:
            ones = f_rgb.new_ones(batch, channels)
            return GateOutputs(f_rgb.new_full((batch,), 0.5), ones, ones, ones / channels)
        w_light = self.illumination_gate(f_rgb, f_ir)
        a_diff, w_diff_rgb, w_diff_ir = self.difference_gate(f_rgb, f_ir)
        return GateOutputs(w_light, w_diff_rgb, w_diff_ir, a_diff)

    def refine_features(self, f_fused: torch.Tensor,
                        scan=selective_scan) -> Tuple[torch.Tensor, torch.Tensor]:
        """Achatamento → pilha Mamba → reconstrução espacial → projeção 1×1 em 2C."""
        require_finite('f_fused', f_fused)
        tokens = TokenSequence.from_feature_map(f_fused)
        for block in self.mamba:
            tokens = block(tokens, scan=scan)
        refined = self.refine_proj(tokens.to_feature_map())
        f_rgb_refined, f_ir_refined = refined.chunk(2, dim=1)
        return f_rgb_refined, f_ir_refined

    def forward(self, f_rgb: torch.Tensor, f_ir: torch.Tensor) -> torch.Tensor:
        check_same_shape(f_rgb, f_ir)
        gates = self.compute_gates(f_rgb, f_ir)
        self.last_gates = gates.detach() if self.cfg.gated else None

        f_fused = dual_gated_fuse(f_rgb, f_ir, gates)
        f_rgb_refined, f_ir_refined = self.refine_features(f_fused)

        f_rgb_out = residual_integrate(f_rgb, f_rgb_refined)
        f_ir_out = residual_integrate(f_ir, f_ir_refined)
        return self.shuffle(f_rgb_out, f_ir_out)


class ConcatFusion(nn.Module):
    """Concatenação de canais seguida de projeção 1×1 (2C → C)."""

    def __init__(self, cfg: FusionScaleConfig):
        super().__init__()
        self.proj = nn.Conv2d(2 * cfg.channels, cfg.channels, kernel_size=1)
        self.last_gates = None

    def forward(self, f_rgb: torch.Tensor, f_ir: torch.Tensor) -> torch.Tensor:
        check_same_shape(f_rgb, f_ir)
        return self.proj(torch.cat([f_rgb, f_ir], dim=1))
