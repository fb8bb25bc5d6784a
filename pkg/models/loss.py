"""
Perda de deteção sem âncoras.

Atribuição: cada alvo é positivo numa única célula (a que contém o seu
centro) de um único nível, escolhido pelo lado maior da caixa:
    < 1/16 → P2, < 1/8 → P3, < 1/4 → P4, restantes → P5
(sem cabeça P2, os alvos pequenos descem para P3).

Classificação: BCE sobre todas as células, somada e dividida pelo número
de positivos. Caixa: CIoU sobre as células positivas.
"""
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import torch
import torch.nn.functional as F
from torchvision.ops import complete_box_iou_loss

from models.box_coder import decode_box, positive_cell
from models.head import HeadOutput


# Limiares (fração do lado da imagem) que separam P2 | P3 | P4 | P5
LEVEL_THRESHOLDS = (1 / 16, 1 / 8, 1 / 4)
BOX_LOSS_WEIGHT = 2.0


class TargetError(ValueError):
    """Alvo com classe ou geometria inválida."""


@dataclass
class LossOutput:
    total: torch.Tensor
    cls: torch.Tensor
    box: torch.Tensor
    num_positives: int

    def to_dict(self) -> Dict[str, float]:
        return {'loss': float(self.total.detach()),
                'loss_cls': float(self.cls.detach()),
                'loss_box': float(self.box.detach())}


@dataclass(frozen=True)
class Assignment:
    """Célula positiva de um alvo."""
    image: int
    level: int
    row: int
    col: int
    class_id: int
    box_xyxy: Tuple[float, float, float, float]


def assign_level(width: float, height: float, levels: Sequence[int]) -> int:
    side = max(width, height)
    level = 5
    for candidate, threshold in zip((2, 3, 4), LEVEL_THRESHOLDS):
        if side < threshold:
            level = candidate
            break
    available = sorted(levels)
    if level < available[0]:
        return available[0]
    return min(level, available[-1])


def validate_targets(targets: torch.Tensor, num_classes: int) -> None:
    """
    Raises:
        TargetError: Formato diferente de (n, 5), classe fora de [0, K) ou w/h ≤ 0
    """
    if targets.dim() != 2 or targets.shape[1] != 5:
        raise TargetError(f"alvos têm de ser (n, 5), recebido {tuple(targets.shape)}")
    if targets.numel() == 0:
        return
    classes = targets[:, 0]
    if (classes < 0).any() or (classes >= num_classes).any() or (classes != classes.round()).any():
        raise TargetError(f"classe fora de [0, {num_classes})")
    if (targets[:, 3:5] <= 0).any():
        raise TargetError("caixa com largura ou altura ≤ 0")


def assign_targets(pred: HeadOutput, targets: Sequence[torch.Tensor]) -> List[Assignment]:
    """
    Atribuição por centro de célula.

    Args:
        pred: Saída das cabeças (define níveis e grelhas)
        targets: Por imagem, tensor (n, 5) com [classe, cx, cy, w, h] normalizados
    """
    if len(targets) != pred.batch_size:
        raise TargetError(f"{len(targets)} listas de alvos para lote de {pred.batch_size}")
    assignments = []
    for image, image_targets in enumerate(targets):
        validate_targets(image_targets, pred.num_classes)
        for class_id, cx, cy, w, h in image_targets.tolist():
            level = assign_level(w, h, pred.levels)
            height, width = pred.cls_logits[level].shape[-2:]
            row, col = positive_cell(cx, cy, height, width)
            box = (cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)
            assignments.append(Assignment(image, level, row, col, int(class_id), box))
    return assignments


def compute_loss(pred: HeadOutput, targets: Sequence[torch.Tensor],
                 box_weight: float = BOX_LOSS_WEIGHT) -> LossOutput:
    """
    Perda total = BCE de classe + box_weight · CIoU.

    Sem positivos, a perda de caixa é 0 e a de classe é a BCE somada.
    """
    assignments = assign_targets(pred, targets)
    num_pos = len(assignments)
    normalizer = max(num_pos, 1)

    cls_targets = {level: torch.zeros_like(logits) for level, logits in pred.cls_logits.items()}
    for a in assignments:
        cls_targets[a.level][a.image, a.class_id, a.row, a.col] = 1.0

    loss_cls = sum(
        F.binary_cross_entropy_with_logits(pred.cls_logits[level], cls_targets[level], reduction='sum')
        for level in pred.levels
    ) / normalizer

    reference = next(iter(pred.box_regs.values()))
    if num_pos == 0:
        loss_box = reference.sum() * 0.0
    else:
        predicted, expected = [], []
        for a in assignments:
            height, width = pred.box_regs[a.level].shape[-2:]
            distances = pred.box_regs[a.level][a.image, :, a.row, a.col]
            predicted.append(decode_box(distances, a.row, a.col, height, width))
            expected.append(torch.tensor(a.box_xyxy, dtype=reference.dtype, device=reference.device))
        loss_box = complete_box_iou_loss(torch.stack(predicted), torch.stack(expected),
                                         reduction='sum') / normalizer

    return LossOutput(loss_cls + box_weight * loss_box, loss_cls, loss_box, num_pos)
