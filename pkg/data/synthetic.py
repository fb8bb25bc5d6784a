"""
Cenas sintéticas RGB/IR com iluminação controlada e alvos exclusivos de
uma modalidade.

RGB: fundo texturado multiplicado por λ; os alvos visíveis em RGB são
formas coloridas também multiplicadas por λ, pelo que o contraste
desaparece no escuro.
IR: fundo quase uniforme (≈ 0.2) com os alvos visíveis em IR a ≈ 0.9.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import cv2
import numpy as np

from config.settings import SceneSpecConfig
from data.samples import DatasetError, GroundTruthBox, ModalitySample


logger = logging.getLogger(__name__)

VISIBILITY_MODES = ('both', 'rgb-only', 'ir-only')

IR_BACKGROUND = 0.2
IR_TARGET = 0.9
MAX_PLACEMENT_ATTEMPTS = 50
MAX_OVERLAP = 0.3

# Cor RGB (unidades [0, 1]) por classe; forma: 0 retângulo, 1 elipse, 2 triângulo
CLASS_COLORS = ((0.95, 0.25, 0.2), (0.2, 0.9, 0.35), (0.3, 0.45, 0.95))


@dataclass(frozen=True)
class SceneSpec:
    """
    Attributes:
        img_size: Lado da imagem em píxeis
        count_range: Número mínimo e máximo de objetos
        size_range: Lado do objeto como fração da imagem (amostrado com viés para pequeno)
        illumination: λ fixo; None → amostrado em illumination_range
        visibility_probs: Probabilidades de (both, rgb-only, ir-only)
        num_classes: Número de classes
        seed: Semente da cena
    """
    img_size: int = 64
    count_range: Tuple[int, int] = (2, 6)
    size_range: Tuple[float, float] = (0.03, 0.30)
    illumination: Optional[float] = None
    illumination_range: Tuple[float, float] = (0.0, 1.0)
    visibility_probs: Tuple[float, float, float] = (0.4, 0.3, 0.3)
    num_classes: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        lo, hi = self.count_range
        if lo < 0 or hi < lo:
            raise DatasetError(f"count_range inválido: {self.count_range}")
        s_lo, s_hi = self.size_range
        if not (0.0 < s_lo <= s_hi <= 1.0):
            raise DatasetError(f"size_range inválido: {self.size_range}")
        if self.illumination is not None and not (0.0 <= self.illumination <= 1.0):
            raise DatasetError(f"λ={self.illumination} fora de [0, 1]")
        i_lo, i_hi = self.illumination_range
        if not (0.0 <= i_lo <= i_hi <= 1.0):
            raise DatasetError(f"illumination_range inválido: {self.illumination_range}")
        if len(self.visibility_probs) != 3 or abs(sum(self.visibility_probs) - 1.0) > 1e-6 \
                or min(self.visibility_probs) < 0:
            raise DatasetError(f"visibility_probs tem de ser uma distribuição: {self.visibility_probs}")
        if self.num_classes < 1 or self.img_size < 8:
            raise DatasetError("num_classes ≥ 1 e img_size ≥ 8")

    @classmethod
    def from_config(cls, cfg: SceneSpecConfig, img_size: int, num_classes: int,
                    seed: int) -> 'SceneSpec':
        return cls(img_size=img_size, count_range=tuple(cfg.count_range),
                   size_range=tuple(cfg.size_range), illumination=cfg.illumination,
                   illumination_range=tuple(cfg.illumination_range),
                   visibility_probs=tuple(cfg.visibility_probs),
                   num_classes=num_classes, seed=seed)

    def with_seed(self, seed: int) -> 'SceneSpec':
        return SceneSpec(self.img_size, self.count_range, self.size_range, self.illumination,
                         self.illumination_range, self.visibility_probs, self.num_classes, seed)


def _texture(rng: np.random.Generator, size: int, channels: int, sigma: float) -> np.ndarray:
    noise = rng.random((size, size, channels), dtype=np.float32)
    blurred = cv2.GaussianBlur(noise, (0, 0), sigmaX=sigma)
    if blurred.ndim == 2:
        blurred = blurred[:, :, None]
    lo, hi = float(blurred.min()), float(blurred.max())
    return (blurred - lo) / max(hi - lo, 1e-6)


def _pixel_iou(a: Tuple[int, int, int, int], b: Tuple[int, int, int, int]) -> float:
    ix = max(0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


def _draw_shape(canvas: np.ndarray, class_id: int, rect: Tuple[int, int, int, int],
                color: Tuple[float, ...]) -> None:
    x1, y1, x2, y2 = rect
    shape = class_id % 3
    if shape == 0:
        cv2.rectangle(canvas, (x1, y1), (x2 - 1, y2 - 1), color, thickness=-1)
    elif shape == 1:
        center = ((x1 + x2 - 1) // 2, (y1 + y2 - 1) // 2)
        axes = (max((x2 - x1) // 2, 1), max((y2 - y1) // 2, 1))
        cv2.ellipse(canvas, center, axes, 0, 0, 360, color, thickness=-1)
    else:
        points = np.array([[(x1 + x2 - 1) // 2, y1], [x1, y2 - 1], [x2 - 1, y2 - 1]], dtype=np.int32)
        cv2.fillPoly(canvas, [points], color)


def _place_objects(rng: np.random.Generator, spec: SceneSpec, count: int):
    size = spec.img_size
    s_lo, s_hi = spec.size_range
    placed: List[Tuple[int, int, int, int]] = []
    for _ in range(count):
        for _attempt in range(MAX_PLACEMENT_ATTEMPTS):
            side = s_lo + (s_hi - s_lo) * float(rng.random()) ** 2
            aspect = float(rng.uniform(0.7, 1.4))
            wp = int(np.clip(round(side * size), 2, size))
            hp = int(np.clip(round(side * aspect * size), 2, size))
            x1 = int(rng.integers(0, size - wp + 1))
            y1 = int(rng.integers(0, size - hp + 1))
            rect = (x1, y1, x1 + wp, y1 + hp)
            if all(_pixel_iou(rect, other) <= MAX_OVERLAP for other in placed):
                placed.append(rect)
                break
    return placed


def generate_scene(spec: SceneSpec) -> ModalitySample:
    """
    Gera uma cena determinística para spec.seed.

    As caixas de todos os objetos são devolvidas, qualquer que seja o modo
    de visibilidade. Se a colocação falhar após MAX_PLACEMENT_ATTEMPTS
    tentativas, a cena fica com menos objetos e metadata['placement_shortfall'] > 0.
    """
    rng = np.random.default_rng(spec.seed)
    size = spec.img_size
    illumination = spec.illumination
    if illumination is None:
        illumination = float(rng.uniform(*spec.illumination_range))

    rgb_background = 0.25 + 0.5 * _texture(rng, size, 3, sigma=1.5)
    ir_background = IR_BACKGROUND + 0.04 * (_texture(rng, size, 1, sigma=4.0)[:, :, 0] - 0.5)
    rgb_objects = rgb_background.copy()
    ir = ir_background.copy()

    requested = int(rng.integers(spec.count_range[0], spec.count_range[1] + 1))
    rects = _place_objects(rng, spec, requested)

    boxes, visibility = [], []
    for rect in rects:
        class_id = int(rng.integers(0, spec.num_classes))
        mode = VISIBILITY_MODES[int(rng.choice(3, p=spec.visibility_probs))]
        if mode in ('both', 'rgb-only'):
            _draw_shape(rgb_objects, class_id, rect, CLASS_COLORS[class_id % len(CLASS_COLORS)])
        if mode in ('both', 'ir-only'):
            _draw_shape(ir, class_id, rect, (IR_TARGET,))
        x1, y1, x2, y2 = rect
        boxes.append(GroundTruthBox(class_id, (x1 + x2) / 2 / size, (y1 + y2) / 2 / size,
                                    (x2 - x1) / size, (y2 - y1) / size))
        visibility.append(mode)

    rgb = np.clip(illumination * rgb_objects, 0.0, 1.0).astype(np.float32)
    ir = np.clip(ir, 0.0, 1.0).astype(np.float32)[:, :, None]
    shortfall = requested - len(rects)
    if shortfall:
        logger.debug("cena %d: %d objeto(s) sem espaço", spec.seed, shortfall)

    return ModalitySample(
        sample_id=f"scene_{spec.seed:08d}",
        rgb=rgb,
        ir=ir,
        boxes=boxes,
        metadata={
            'seed': spec.seed,
            'illumination': illumination,
            'visibility': visibility,
            'requested_objects': requested,
            'placement_shortfall': shortfall,
        },
    )


def generate_dataset(spec: SceneSpec, count: int, base_seed: int) -> List[ModalitySample]:
    """count cenas com sementes base_seed, base_seed + 1, ..."""
    return [generate_scene(spec.with_seed(base_seed + i)) for i in range(count)]
