"""
Content Reconstruction Upsampler (CRU): reagrupamento de características com
núcleos previstos a partir do conteúdo.

    F_out(i, j) = Σ_{(p,q) ∈ N_k(i,j)} K_{i,j}(p, q) · F_in(p, q)

N_k(i, j) é a vizinhança k×k (com zeros fora da imagem) da posição de
origem (i // s, j // s).
"""
from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F
from einops import rearrange

from neck.pyramid import PyramidError


NORMALIZATION_TOLERANCE = 1e-5


@dataclass(frozen=True)
class ReassemblyKernelField:
    """
    Núcleos de reagrupamento por posição de saída.

    Attributes:
        kernels: (B, k², H_out, W_out), não negativos, soma 1 em cada posição
        kernel_size: k
    """
    kernels: torch.Tensor
    kernel_size: int

    def __post_init__(self) -> None:
        k2 = self.kernel_size ** 2
        if self.kernels.dim() != 4 or self.kernels.shape[1] != k2:
            raise PyramidError(
                f"campo de núcleos tem forma {tuple(self.kernels.shape)}, esperado (B, {k2}, H, W)"
            )
        with torch.no_grad():
            if bool((self.kernels < -NORMALIZATION_TOLERANCE).any()):
                raise PyramidError("núcleos de reagrupamento com entradas negativas")
            sums = self.kernels.sum(dim=1)
            if not torch.allclose(sums, torch.ones_like(sums), atol=NORMALIZATION_TOLERANCE):
                raise PyramidError("núcleos de reagrupamento não normalizados (soma != 1)")

    @classmethod
    def from_logits(cls, logits: torch.Tensor, kernel_size: int) -> 'ReassemblyKernelField':
        """Normaliza logits (B, k², H_out, W_out) com softmax."""
        return cls(torch.softmax(logits, dim=1), kernel_size)


def reassemble(f_in: torch.Tensor, field: ReassemblyKernelField, scale: int) -> torch.Tensor:
    """
    Aplica o campo de núcleos a f_in, com fator de ampliação scale.

    Returns:
        (B, C, H·scale, W·scale)
    """
    if scale < 2:
        raise PyramidError(f"scale tem de ser >= 2, recebido {scale}")
    batch, channels, height, width = f_in.shape
    k = field.kernel_size
    if tuple(field.kernels.shape[-2:]) != (height * scale, width * scale):
        raise PyramidError(
            f"campo de núcleos {tuple(field.kernels.shape[-2:])} não corresponde a "
            f"{(height * scale, width * scale)}"
        )

    patches = F.unfold(f_in, kernel_size=k, padding=k // 2)
    patches = rearrange(patches, 'b (c k) (h w) -> b c k h w', c=channels, h=height)
    patches = patches.repeat_interleave(scale, dim=3).repeat_interleave(scale, dim=4)
    return torch.einsum('bkhw,bckhw->bchw', field.kernels, patches)


def cru_upsample(f_in: torch.Tensor, kernel_logits: torch.Tensor,
                 scale: int, kernel_size: int) -> torch.Tensor:
    """Softmax dos logits previstos seguido de reassemble."""
    field = ReassemblyKernelField.from_logits(kernel_logits, kernel_size)
    return reassemble(f_in, field, scale)


class ContentReconstructionUpsampler(nn.Module):
    """
    Previsor de núcleos: compressão 1×1 para C/4 canais, convolução para
    s²·k² logits, pixel-shuffle para a grelha ampliada.
    """

    def __init__(self, channels: int, scale: int = 2, kernel_size: int = 5,
                 encoder_kernel: int = 3):
        super().__init__()
        self.scale = scale
        self.kernel_size = kernel_size
        compressed = max(channels // 4, 1)
        self.compress = nn.Conv2d(channels, compressed, kernel_size=1)
        self.encoder = nn.Conv2d(compressed, scale ** 2 * kernel_size ** 2,
                                 kernel_size=encoder_kernel, padding=encoder_kernel // 2)

    def kernel_logits(self, f_in: torch.Tensor) -> torch.Tensor:
        logits = self.encoder(self.compress(f_in))
        return F.pixel_shuffle(logits, self.scale)

    def forward(self, f_in: torch.Tensor) -> torch.Tensor:
        return cru_upsample(f_in, self.kernel_logits(f_in), self.scale, self.kernel_size)
