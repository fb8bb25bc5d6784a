"""
Tipos de dados partilhados pelo gerador sintético, pelo leitor YOLO e pelo
iterador de lotes.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


BOUNDS_TOLERANCE = 1e-6


class DatasetError(ValueError):
    """
    Dados inválidos.

    Attributes:
        path: Ficheiro de origem (quando aplicável)
        line: Linha do ficheiro (1-based, quando aplicável)
    """

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        location = ''
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(location + message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class GroundTruthBox:
    """
    Caixa anotada em coordenadas normalizadas.

    Attributes:
        class_id: Classe (≥ 0)
        cx, cy: Centro em (0, 1)
        w, h: Tamanho em (0, 1]
    """
    class_id: int
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if self.class_id < 0:
            raise DatasetError(f"classe negativa: {self.class_id}")
        if not (0.0 < self.cx < 1.0):
            raise DatasetError(f"cx={self.cx} fora de (0, 1)")
        if not (0.0 < self.cy < 1.0):
            raise DatasetError(f"cy={self.cy} fora de (0, 1)")
        if not (0.0 < self.w <= 1.0) or not (0.0 < self.h <= 1.0):
            raise DatasetError(f"tamanho ({self.w}, {self.h}) fora de (0, 1]")
        x1, y1, x2, y2 = self.xyxy
        if min(x1, y1) < -BOUNDS_TOLERANCE or max(x2, y2) > 1.0 + BOUNDS_TOLERANCE:
            raise DatasetError(f"caixa ({x1:.4f}, {y1:.4f}, {x2:.4f}, {y2:.4f}) sai da imagem")

    @property
    def xyxy(self) -> Tuple[float, float, float, float]:
        return (self.cx - self.w / 2, self.cy - self.h / 2,
                self.cx + self.w / 2, self.cy + self.h / 2)

    def to_row(self) -> List[float]:
        return [float(self.class_id), self.cx, self.cy, self.w, self.h]

    def to_label_line(self) -> str:
        return f"{self.class_id} {self.cx:.6f} {self.cy:.6f} {self.w:.6f} {self.h:.6f}"

    def flipped(self) -> 'GroundTruthBox':
        """Espelho horizontal: cx ↦ 1 − cx."""
        return GroundTruthBox(self.class_id, 1.0 - self.cx, self.cy, self.w, self.h)


@dataclass
class ModalitySample:
    """
    Par RGB/IR registado com as suas anotações.

    Attributes:
        sample_id: Identificador estável (nome do ficheiro ou da cena)
        rgb: (H, W, 3) float32 em [0, 1]
        ir: (H, W, 1) float32 em [0, 1], ou None (modo de uma modalidade)
        boxes: Caixas de todos os objetos, visíveis ou não em cada modalidade
        metadata: Iluminação, modos de visibilidade, semente, ...
    """
    sample_id: str
    rgb: np.ndarray
    ir: Optional[np.ndarray]
    boxes: List[GroundTruthBox]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.rgb.ndim != 3 or self.rgb.shape[2] != 3:
            raise DatasetError(f"{self.sample_id}: RGB tem de ser (H, W, 3), recebido {self.rgb.shape}")
        if self.ir is not None:
            if self.ir.ndim == 2:
                self.ir = self.ir[:, :, None]
            if self.ir.shape[:2] != self.rgb.shape[:2]:
                raise DatasetError(
                    f"{self.sample_id}: RGB {self.rgb.shape[:2]} e IR {self.ir.shape[:2]} não registadas"
                )

    @property
    def size(self) -> Tuple[int, int]:
        return self.rgb.shape[0], self.rgb.shape[1]

    @property
    def has_ir(self) -> bool:
        return self.ir is not None
