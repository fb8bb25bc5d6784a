"""
Codificação das caixas relativamente a uma célula da grelha.

Uma célula (row, col) de uma grelha H×W tem centro ((col + 0.5)/W,
(row + 0.5)/H) em coordenadas normalizadas. A regressão guarda as
distâncias (l, t, r, b) desse centro aos lados da caixa, em células.
"""
from typing import Tuple

import torch


def cell_center(row: int, col: int, height: int, width: int) -> Tuple[float, float]:
    return (col + 0.5) / width, (row + 0.5) / height


def positive_cell(cx: float, cy: float, height: int, width: int) -> Tuple[int, int]:
    """(⌊cy·H⌋, ⌊cx·W⌋), limitado à grelha."""
    row = min(int(cy * height), height - 1)
    col = min(int(cx * width), width - 1)
    return row, col


def encode_box(box_xyxy: torch.Tensor, row: int, col: int, height: int, width: int) -> torch.Tensor:
    """Caixa normalizada (x1, y1, x2, y2) → (l, t, r, b) em células."""
    x1, y1, x2, y2 = box_xyxy.unbind(-1)
    ax, ay = col + 0.5, row + 0.5
    return torch.stack([ax - x1 * width, ay - y1 * height,
                        x2 * width - ax, y2 * height - ay], dim=-1)


def decode_box(distances: torch.Tensor, row: int, col: int, height: int, width: int) -> torch.Tensor:
    """Inversa de encode_box."""
    l, t, r, b = distances.unbind(-1)
    ax, ay = col + 0.5, row + 0.5
    return torch.stack([(ax - l) / width, (ay - t) / height,
                        (ax + r) / width, (ay + b) / height], dim=-1)


def decode_grid(box_regs: torch.Tensor) -> torch.Tensor:
    """(B, 4, H, W) distâncias → (B, H, W, 4) caixas normalizadas xyxy."""
    height, width = box_regs.shape[-2:]
    rows = torch.arange(height, dtype=box_regs.dtype, device=box_regs.device) + 0.5
    cols = torch.arange(width, dtype=box_regs.dtype, device=box_regs.device) + 0.5
    ay, ax = torch.meshgrid(rows, cols, indexing='ij')
    l, t, r, b = box_regs.unbind(1)
    return torch.stack([(ax - l) / width, (ay - t) / height,
                        (ax + r) / width, (ay + b) / height], dim=-1)
