"""
IoU e mAP@.5.

Emparelhamento guloso por confiança decrescente: cada previsão fica com o
ground truth da mesma classe, ainda livre, de maior IoU (empate → menor
índice), se esse IoU for ≥ 0.5. AP com interpolação em todos os pontos;
mAP = média sobre as classes presentes no ground truth.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Set, Tuple

import numpy as np

from data.samples import GroundTruthBox
from models.postprocess import Detection, sort_detections


IOU_MATCH_THRESHOLD = 0.5

Box = Tuple[float, float, float, float]


class EvaluationError(ValueError):
    """Entradas inválidas para as métricas."""


def iou(a: Box, b: Box) -> float:
    """IoU de duas caixas xyxy; caixas de área nula dão 0."""
    area_a = max(0.0, a[2] - a[0]) * max(0.0, a[3] - a[1])
    area_b = max(0.0, b[2] - b[0]) * max(0.0, b[3] - b[1])
    if area_a <= 0.0 or area_b <= 0.0:
        return 0.0
    ix = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    union = area_a + area_b - inter
    return min(1.0, inter / union) if union > 0 else 0.0


def all_point_ap(recall: np.ndarray, precision: np.ndarray) -> float:
    """Área sob o envelope da curva precisão-revocação."""
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    steps = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


@dataclass
class ImageMatch:
    """
    Attributes:
        detections: Previsões por confiança decrescente
        true_positive: Flag por previsão
        matched_gt: Índice do ground truth emparelhado (−1 para FP)
        missed_gt: Índices de ground truth sem previsão (FN)
    """
    detections: List[Detection]
    true_positive: List[bool]
    matched_gt: List[int]
    missed_gt: List[int]


def match_image(detections: Sequence[Detection], gts: Sequence[GroundTruthBox],
                iou_threshold: float = IOU_MATCH_THRESHOLD) -> ImageMatch:
    ordered = sort_detections(detections)
    gt_boxes = [gt.xyxy for gt in gts]
    taken: Set[int] = set()
    flags, matched = [], []
    for det in ordered:
        best_index, best_iou = -1, iou_threshold
        for index, gt in enumerate(gts):
            if index in taken or gt.class_id != det.class_id:
                continue
            overlap = iou(det.box, gt_boxes[index])
            if overlap > best_iou or (overlap == best_iou and best_index == -1):
                best_index, best_iou = index, overlap
        if best_index >= 0:
            taken.add(best_index)
        flags.append(best_index >= 0)
        matched.append(best_index)
    missed = [index for index in range(len(gts)) if index not in taken]
    return ImageMatch(ordered, flags, matched, missed)


@dataclass
class MatchResult:
    """
    Attributes:
        matches: Emparelhamento por imagem
        precision, recall: Curvas PR por classe (pontos por confiança decrescente)
        ap: AP por classe presente no ground truth
        num_gt: Ground truth por classe
        map50: Média de ap
    """
    matches: List[ImageMatch]
    precision: Dict[int, np.ndarray] = field(default_factory=dict)
    recall: Dict[int, np.ndarray] = field(default_factory=dict)
    ap: Dict[int, float] = field(default_factory=dict)
    num_gt: Dict[int, int] = field(default_factory=dict)
    map50: float = 0.0

    @property
    def num_predictions(self) -> int:
        return sum(len(m.detections) for m in self.matches)

    def true_positives(self, class_id: int) -> int:
        return sum(flag for m in self.matches
                   for det, flag in zip(m.detections, m.true_positive) if det.class_id == class_id)

    def to_report(self) -> Dict[str, float]:
        """Documento plano: map50, ap.<classe>, contagens."""
        report: Dict[str, float] = {
            'map50': round(self.map50, 6),
            'num_images': len(self.matches),
            'num_gt': sum(self.num_gt.values()),
            'num_predictions': self.num_predictions,
        }
        for class_id, value in sorted(self.ap.items()):
            report[f"ap.{class_id}"] = round(value, 6)
        return report


def map50(detections: Sequence[Sequence[Detection]], gts: Sequence[Sequence[GroundTruthBox]],
          num_classes: int, iou_threshold: float = IOU_MATCH_THRESHOLD) -> MatchResult:
    """
    mAP@.5 sobre um conjunto de imagens.

    Raises:
        EvaluationError: Listas de tamanhos diferentes ou classe fora de [0, K)
    """
    if len(detections) != len(gts):
        raise EvaluationError(f"{len(detections)} listas de previsões para {len(gts)} imagens")
    for image_dets, image_gts in zip(detections, gts):
        for item in list(image_dets) + list(image_gts):
            if not 0 <= item.class_id < num_classes:
                raise EvaluationError(f"classe {item.class_id} fora de [0, {num_classes})")

    matches = [match_image(d, g, iou_threshold) for d, g in zip(detections, gts)]
    result = MatchResult(matches)

    num_gt = np.zeros(num_classes, dtype=np.int64)
    for image_gts in gts:
        for gt in image_gts:
            num_gt[gt.class_id] += 1

    # (−confiança, imagem, nível, linha, coluna) → ordem global determinística
    scored: Dict[int, List[Tuple[Tuple, bool]]] = {k: [] for k in range(num_classes)}
    for image, match in enumerate(matches):
        for det, flag in zip(match.detections, match.true_positive):
            key = (-det.confidence, image, det.level, det.row, det.col)
            scored[det.class_id].append((key, flag))

    for class_id in range(num_classes):
        if num_gt[class_id] == 0:
            continue
        entries = sorted(scored[class_id], key=lambda item: item[0])
        flags = np.array([flag for _, flag in entries], dtype=np.float64)
        tp = np.cumsum(flags)
        fp = np.cumsum(1.0 - flags)
        recall = tp / num_gt[class_id]
        precision = tp / np.maximum(tp + fp, np.finfo(np.float64).eps)
        result.precision[class_id] = precision
        result.recall[class_id] = recall
        result.ap[class_id] = all_point_ap(recall, precision) if len(entries) else 0.0
        result.num_gt[class_id] = int(num_gt[class_id])

    result.map50 = float(np.mean(list(result.ap.values()))) if result.ap else 0.0
    return result
