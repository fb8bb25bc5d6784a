"""
Adaptive Weighted Fuser (AWF): soma ponderada normalizada rápida.

    F_fused = (w_1·F'_deep + w_2·F_mid + w_3·F'_shallow) / (w_1 + w_2 + w_3 + ε)

Os pesos brutos passam por max(·, 0) antes da normalização.
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import torch
import torch.nn as nn
import torch.nn.functional as F

from neck.pyramid import PyramidError


DEFAULT_EPSILON = 1e-4


@dataclass(frozen=True)
class FusionWeights:
    """
    Attributes:
        raw: (3,) pesos escalares aprendíveis, antes da projeção
        epsilon: constante de estabilidade
    """
    raw: torch.Tensor
    epsilon: float = DEFAULT_EPSILON

    def projected(self) -> torch.Tensor:
        return F.relu(self.raw)


def awf_fuse(f_deep: Optional[torch.Tensor], f_mid: torch.Tensor,
             f_shallow: Optional[torch.Tensor], weights: FusionWeights) -> torch.Tensor:
    """
    Fusão das três entradas já reamostradas para a forma de f_mid.

    Uma entrada None (nível de fronteira) fica com o peso fixado em 0.

    Raises:
        PyramidError: Formas diferentes
    """
    inputs: Sequence[Optional[torch.Tensor]] = (f_deep, f_mid, f_shallow)
    for name, tensor in zip(('deep', 'shallow'), (f_deep, f_shallow)):
        if tensor is not None and tensor.shape != f_mid.shape:
            raise PyramidError(
                f"AWF: entrada {name} {tuple(tensor.shape)} difere de mid {tuple(f_mid.shape)}"
            )

    w = weights.projected()
    present = torch.tensor([t is not None for t in inputs], dtype=w.dtype, device=w.device)
    w = w * present

    total = sum(w[i] * t for i, t in enumerate(inputs) if t is not None)
    return total / (w.sum() + weights.epsilon)


def mean_fuse(f_deep: Optional[torch.Tensor], f_mid: torch.Tensor,
              f_shallow: Optional[torch.Tensor]) -> torch.Tensor:
    """Média não ponderada das entradas presentes (ablação sem AWF)."""
    present = [t for t in (f_deep, f_mid, f_shallow) if t is not None]
    for tensor in present:
        if tensor.shape != f_mid.shape:
            raise PyramidError(f"entrada {tuple(tensor.shape)} difere de mid {tuple(f_mid.shape)}")
    return sum(present) / len(present)


class AdaptiveWeightedFuser(nn.Module):
    """Três pesos escalares inicializados a 1."""

    def __init__(self, epsilon: float = DEFAULT_EPSILON):
        super().__init__()
        self.weight = nn.Parameter(torch.ones(3))
        self.epsilon = epsilon

    def forward(self, f_deep: Optional[torch.Tensor], f_mid: torch.Tensor,
                f_shallow: Optional[torch.Tensor]) -> torch.Tensor:
        return awf_fuse(f_deep, f_mid, f_shallow, FusionWeights(self.weight, self.epsilon))
