"""
Contagem de parâmetros (coluna "Params" das tabelas de ablação).
"""
from typing import Dict

import torch.nn as nn


def count_params(model: nn.Module) -> int:
    """Total de escalares em todos os parâmetros (buffers excluídos)."""
    return sum(parameter.numel() for parameter in model.parameters())


def count_params_by_module(model: nn.Module) -> Dict[str, int]:
    """Contagem por submódulo direto (backbone, neck, head, ...)."""
    return {name: count_params(child) for name, child in model.named_children()}
