"""
Pirâmide de características: nível l ∈ {2, 3, 4, 5} → mapa com lado input/2^l.
"""
from typing import Dict, Sequence

import torch


FeaturePyramid = Dict[int, torch.Tensor]

PYRAMID_LEVELS = (2, 3, 4, 5)


class PyramidError(ValueError):
    """Pirâmide com níveis em falta ou resoluções inconsistentes."""


def check_pyramid(pyramid: FeaturePyramid, levels: Sequence[int] = PYRAMID_LEVELS) -> None:
    """
    Verifica presença dos níveis e a divisão por 2 entre níveis consecutivos.

    Raises:
        PyramidError: Nível em falta ou resolução inconsistente
    """
    missing = [level for level in levels if level not in pyramid]
    if missing:
        raise PyramidError(f"níveis em falta na pirâmide: {missing}")
    for shallow, deep in zip(levels[:-1], levels[1:]):
        check_adjacent(pyramid[deep], pyramid[shallow], f"P{deep}/P{shallow}")


def check_adjacent(deep: torch.Tensor, shallow: torch.Tensor, label: str = '') -> None:
    """O mapa profundo tem metade da resolução (arredondada para cima) do raso."""
    dh, dw = deep.shape[-2:]
    sh, sw = shallow.shape[-2:]
    if (dh, dw) != ((sh + 1) // 2, (sw + 1) // 2):
        raise PyramidError(
            f"{label}: resoluções {(dh, dw)} e {(sh, sw)} não são escalas adjacentes"
        )
