"""
Bloco Mamba bidirecional:

    X'_seq = LayerNorm(X_seq + Fusion_bi(Cat(Y_fwd, Y_bwd)))
    Y_fwd = Mamba_fwd(X_seq),  Y_bwd = Rev(Mamba_bwd(Rev(X_seq)))
"""
import math
from typing import Callable, Optional

import torch
import torch.nn as nn
import torch.nn.functional as F

from ssm.scan import ScanParameters, ScanShapeError, TokenSequence, selective_scan


ScanFn = Callable[[TokenSequence, ScanParameters], TokenSequence]


class SelectiveSSM(nn.Module):
    """
    SSM seletivo mínimo (expansão 1, sem convolução nem gating).

    delta = softplus(Linear(x)); B_in, C_out = Linear(x); A = −exp(A_log),
    inicializado a −(1..S) em cada canal.
    """

    def __init__(self, channels: int, state_dim: int = 8,
                 dt_min: float = 1e-3, dt_max: float = 1e-1):
        super().__init__()
        self.channels = channels
        self.state_dim = state_dim

        self.delta_proj = nn.Linear(channels, channels)
        self.B_proj = nn.Linear(channels, state_dim, bias=False)
        self.C_proj = nn.Linear(channels, state_dim, bias=False)

        A = torch.arange(1, state_dim + 1, dtype=torch.float32).repeat(channels, 1)
        self.A_log = nn.Parameter(torch.log(A))
        self.D = nn.Parameter(torch.ones(channels))

        # bias de delta tal que softplus(bias) ~ log-uniforme em [dt_min, dt_max]
        with torch.no_grad():
            dt = torch.exp(
                torch.rand(channels) * (math.log(dt_max) - math.log(dt_min)) + math.log(dt_min)
            )
            self.delta_proj.bias.copy_(dt + torch.log(-torch.expm1(-dt)))
            self.delta_proj.weight.mul_(0.1)

    @property
    def A(self) -> torch.Tensor:
        return -torch.exp(self.A_log)

    def scan_parameters(self, x: TokenSequence) -> ScanParameters:
        """Parâmetros dependentes da entrada para a sequência x."""
        if x.channels != self.channels:
            raise ScanShapeError(f"sequência com {x.channels} canais, SSM espera {self.channels}")
        return ScanParameters(
            delta=F.softplus(self.delta_proj(x.data)),
            A=self.A,
            B_in=self.B_proj(x.data),
            C_out=self.C_proj(x.data),
            D=self.D,
        )

    def forward(self, x: TokenSequence, scan: ScanFn = selective_scan) -> TokenSequence:
        return scan(x, self.scan_parameters(x))


def bidirectional_block(x: TokenSequence,
                        params_fwd: ScanParameters,
                        params_bwd: Optional[ScanParameters],
                        fusion_weight: torch.Tensor,
                        fusion_bias: Optional[torch.Tensor] = None,
                        norm_weight: Optional[torch.Tensor] = None,
                        norm_bias: Optional[torch.Tensor] = None,
                        eps: float = 1e-5,
                        scan: ScanFn = selective_scan) -> TokenSequence:
    """
    Forma funcional do bloco.

    Args:
        x: Sequência (B, N, C), finita
        params_fwd: Parâmetros do varrimento direto sobre x
        params_bwd: Parâmetros do varrimento inverso sobre Rev(x);
            None → bloco unidirecional (Fusion_bi mapeia C → C)
        fusion_weight: (C, 2C), ou (C, C) no modo unidirecional
        norm_weight, norm_bias: Afinidade da LayerNorm (None → identidade)

    Raises:
        ScanShapeError: fusion_weight incompatível com 2C (ou C)
    """
    channels = x.channels
    in_features = 2 * channels if params_bwd is not None else channels
    if tuple(fusion_weight.shape) != (channels, in_features):
        raise ScanShapeError(
            f"Fusion_bi tem forma {tuple(fusion_weight.shape)}, esperado ({channels}, {in_features})"
        )

    features = directional_features(x, params_fwd, params_bwd, scan)
    fused = F.linear(features, fusion_weight, fusion_bias)
    out = F.layer_norm(x.data + fused, (channels,), norm_weight, norm_bias, eps)
    return x.with_data(out)


def directional_features(x: TokenSequence,
                         params_fwd: ScanParameters,
                         params_bwd: Optional[ScanParameters],
                         scan: ScanFn = selective_scan) -> torch.Tensor:
    """Cat(Y_fwd, Y_bwd) antes da projeção de fusão (só Y_fwd sem params_bwd)."""
    y_fwd = scan(x, params_fwd).data
    if params_bwd is None:
        return y_fwd
    y_bwd = scan(x.reversed(), params_bwd).reversed().data
    return torch.cat([y_fwd, y_bwd], dim=-1)


class BidirectionalMambaBlock(nn.Module):
    """
    Bloco Mamba com varrimentos direto e inverso.

    Args:
        channels: Canais C dos tokens
        state_dim: Dimensão S do estado
        bidirectional: False → apenas Mamba_fwd (variante Uni-Mamba)
        tie_directions: Mamba_bwd partilha os parâmetros de Mamba_fwd
    """

    def __init__(self, channels: int, state_dim: int = 8,
                 bidirectional: bool = True, tie_directions: bool = False):
        super().__init__()
        self.bidirectional = bidirectional
        self.tie_directions = tie_directions

        self.ssm_fwd = SelectiveSSM(channels, state_dim)
        self.ssm_bwd = None
        if bidirectional and not tie_directions:
            self.ssm_bwd = SelectiveSSM(channels, state_dim)

        self.fusion = nn.Linear(2 * channels if bidirectional else channels, channels)
        self.norm = nn.LayerNorm(channels)

    def _backward_ssm(self) -> Optional[SelectiveSSM]:
        if not self.bidirectional:
            return None
        return self.ssm_fwd if self.tie_directions else self.ssm_bwd

    def _parameters_for(self, x: TokenSequence):
        params_fwd = self.ssm_fwd.scan_parameters(x)
        ssm_bwd = self._backward_ssm()
        params_bwd = ssm_bwd.scan_parameters(x.reversed()) if ssm_bwd is not None else None
        return params_fwd, params_bwd

    def directional_features(self, x: TokenSequence, scan: ScanFn = selective_scan) -> torch.Tensor:
        params_fwd, params_bwd = self._parameters_for(x)
        return directional_features(x, params_fwd, params_bwd, scan)

    def forward(self, x: TokenSequence, scan: ScanFn = selective_scan) -> TokenSequence:
        params_fwd, params_bwd = self._parameters_for(x)
        return bidirectional_block(
            x, params_fwd, params_bwd,
            self.fusion.weight, self.fusion.bias,
            self.norm.weight, self.norm.bias, self.norm.eps,
            scan=scan,
        )


__all__ = [
    'SelectiveSSM',
    'BidirectionalMambaBlock',
    'bidirectional_block',
    'directional_features',
]
