"""
Descodificação das cabeças e supressão de não-máximos (NMS) por classe.
"""
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Sequence, Tuple

import torch
from torchvision.ops import box_iou

from models.box_coder import decode_grid
from models.head import HeadOutput


MAX_CANDIDATES = 1000


@dataclass(frozen=True)
class Detection:
    """
    Attributes:
        class_id: Classe prevista
        confidence: σ(logit) da classe
        box: (x1, y1, x2, y2) normalizado, recortado a [0, 1]
        level, row, col: Célula de origem (desempate determinístico)
    """
    class_id: int
    confidence: float
    box: Tuple[float, float, float, float]
    level: int = 0
    row: int = 0
    col: int = 0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['box'] = list(self.box)
        return data


def greedy_nms(boxes: torch.Tensor, classes: torch.Tensor, iou_threshold: float) -> List[int]:
    """
    NMS guloso sobre caixas já ordenadas por confiança decrescente.

    Uma caixa suprime as seguintes da mesma classe com IoU > iou_threshold.

    Returns:
        Índices mantidos, na ordem de entrada
    """
    count = boxes.shape[0]
    if count == 0:
        return []
    overlaps = box_iou(boxes, boxes)
    same_class = classes[:, None] == classes[None, :]
    suppressed = torch.zeros(count, dtype=torch.bool, device=boxes.device)
    keep = []
    for i in range(count):
        if suppressed[i]:
            continue
        keep.append(i)
        suppressed |= (overlaps[i] > iou_threshold) & same_class[i]
    return keep


def nms_detections(detections: Sequence[Detection], iou_threshold: float) -> List[Detection]:
    """NMS sobre uma lista de Detection; a ordem relativa é mantida."""
    ordered = sort_detections(detections)
    if not ordered:
        return []
    boxes = torch.tensor([d.box for d in ordered], dtype=torch.float64)
    classes = torch.tensor([d.class_id for d in ordered])
    return [ordered[i] for i in greedy_nms(boxes, classes, iou_threshold)]


def sort_detections(detections: Sequence[Detection]) -> List[Detection]:
    """Confiança decrescente; empates por (nível, linha, coluna, classe)."""
    return sorted(detections, key=lambda d: (-d.confidence, d.level, d.row, d.col, d.class_id))


def _image_candidates(pred: HeadOutput, image: int, conf_threshold: float):
    scores, boxes, classes, cells = [], [], [], []
    for level in pred.levels:
        # (H, W, K): nonzero percorre as células por linha, coluna e classe
        level_scores = torch.sigmoid(pred.cls_logits[level][image]).permute(1, 2, 0)
        level_boxes = decode_grid(pred.box_regs[level][image:image + 1])[0]
        hits = torch.nonzero(level_scores > conf_threshold, as_tuple=False)
        if hits.numel() == 0:
            continue
        rows, cols, ks = hits.unbind(1)
        scores.append(level_scores[rows, cols, ks])
        boxes.append(level_boxes[rows, cols])
        classes.append(ks)
        cells.append(torch.stack([torch.full_like(rows, level), rows, cols], dim=1))
    if not scores:
        return None
    return torch.cat(scores), torch.cat(boxes), torch.cat(classes), torch.cat(cells)


def _sanitize(boxes: torch.Tensor) -> torch.Tensor:
    x1 = torch.minimum(boxes[:, 0], boxes[:, 2])
    x2 = torch.maximum(boxes[:, 0], boxes[:, 2])
    y1 = torch.minimum(boxes[:, 1], boxes[:, 3])
    y2 = torch.maximum(boxes[:, 1], boxes[:, 3])
    return torch.stack([x1, y1, x2, y2], dim=1).clamp(0.0, 1.0)


@torch.no_grad()
def decode_and_nms(pred: HeadOutput, conf_threshold: float = 0.25,
                   iou_threshold: float = 0.6,
                   max_candidates: int = MAX_CANDIDATES) -> List[List[Detection]]:
    """
    Células acima do limiar → caixas → NMS por classe.

    Returns:
        Uma lista de Detection por imagem, por confiança decrescente com
        empates resolvidos pela ordem (nível, linha, coluna)
    """
    if not 0 < conf_threshold < 1 or not 0 < iou_threshold < 1:
        raise ValueError(f"limiares têm de estar em (0, 1): {conf_threshold}, {iou_threshold}")

    results: List[List[Detection]] = []
    for image in range(pred.batch_size):
        candidates = _image_candidates(pred, image, conf_threshold)
        if candidates is None:
            results.append([])
            continue
        scores, boxes, classes, cells = candidates
        # ordenação estável: a ordem (nível, linha, coluna) desempata
        order = torch.sort(scores, descending=True, stable=True).indices[:max_candidates]
        scores, classes, cells = scores[order], classes[order], cells[order]
        boxes = _sanitize(boxes[order].float())

        keep = greedy_nms(boxes, classes, iou_threshold)
        results.append([
            Detection(
                class_id=int(classes[i]),
                confidence=float(scores[i]),
                box=tuple(float(v) for v in boxes[i]),
                level=int(cells[i, 0]),
                row=int(cells[i, 1]),
                col=int(cells[i, 2]),
            )
            for i in keep
        ])
    return results
