"""
Iterador de lotes: baralhamento com semente, letterbox e espelho
horizontal aplicado às duas modalidades do par.
"""
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import cv2
import numpy as np
import torch

from data.samples import DatasetError, GroundTruthBox, ModalitySample


LETTERBOX_FILL = 0.0
FLIP_PROBABILITY = 0.5
# Semente de um lote: seed · BATCH_SEED_STRIDE + índice do lote
BATCH_SEED_STRIDE = 100_003


@dataclass
class Batch:
    """
    Attributes:
        rgb: (B, 3, S, S) float32
        ir: (B, 1, S, S) float32, ou None em conjuntos só RGB
        targets: Por imagem, tensor (n, 5) [classe, cx, cy, w, h]
        boxes: As mesmas caixas como GroundTruthBox (após letterbox e espelho)
        sample_ids: Identificadores das amostras
        seed: Semente do lote (reproduz o aumento de dados)
    """
    rgb: torch.Tensor
    ir: Optional[torch.Tensor]
    targets: List[torch.Tensor]
    boxes: List[List[GroundTruthBox]]
    sample_ids: List[str]
    seed: int

    def __len__(self) -> int:
        return self.rgb.shape[0]


def batch_seed(seed: int, index: int) -> int:
    return seed * BATCH_SEED_STRIDE + index


def letterbox(image: np.ndarray, size: int) -> Tuple[np.ndarray, float, int, int]:
    """
    Redimensiona mantendo a proporção e preenche até size×size.

    Returns:
        (imagem, escala, pad_x, pad_y)
    """
    height, width = image.shape[:2]
    scale = size / max(height, width)
    new_w, new_h = max(1, round(width * scale)), max(1, round(height * scale))
    channels = image.shape[2]
    if (new_w, new_h) != (width, height):
        resized = cv2.resize(image, (new_w, new_h), interpolation=cv2.INTER_LINEAR)
        if resized.ndim == 2:
            resized = resized[:, :, None]
    else:
        resized = image
    canvas = np.full((size, size, channels), LETTERBOX_FILL, dtype=np.float32)
    pad_x, pad_y = (size - new_w) // 2, (size - new_h) // 2
    canvas[pad_y:pad_y + new_h, pad_x:pad_x + new_w] = resized
    return canvas, scale, pad_x, pad_y


def letterbox_boxes(boxes: Sequence[GroundTruthBox], original: Tuple[int, int], size: int,
                    scale: float, pad_x: int, pad_y: int) -> List[GroundTruthBox]:
    height, width = original
    return [
        GroundTruthBox(
            box.class_id,
            (box.cx * width * scale + pad_x) / size,
            (box.cy * height * scale + pad_y) / size,
            min(box.w * width * scale / size, 1.0),
            min(box.h * height * scale / size, 1.0),
        )
        for box in boxes
    ]


def prepare_sample(sample: ModalitySample, size: int, flip: bool):
    rgb, scale, pad_x, pad_y = letterbox(sample.rgb, size)
    ir = letterbox(sample.ir, size)[0] if sample.ir is not None else None
    boxes = sample.boxes
    if (scale, pad_x, pad_y) != (1.0, 0, 0):
        boxes = letterbox_boxes(boxes, sample.size, size, scale, pad_x, pad_y)
    if flip:
        rgb = rgb[:, ::-1]
        ir = ir[:, ::-1] if ir is not None else None
        boxes = [box.flipped() for box in boxes]
    return rgb, ir, boxes


def _to_tensor(images: List[np.ndarray]) -> torch.Tensor:
    stacked = np.ascontiguousarray(np.stack(images, axis=0))
    return torch.from_numpy(stacked).permute(0, 3, 1, 2).contiguous()


def iterate_batches(samples: Sequence[ModalitySample], batch_size: int, seed: int,
                    augment: bool = True, img_size: int = 64,
                    shuffle: bool = True) -> Iterator[Batch]:
    """
    Lotes de batch_size (o último pode ser menor).

    Raises:
        DatasetError: Conjunto vazio, batch_size < 1 ou mistura de amostras
            com e sem IR
    """
    if batch_size < 1:
        raise DatasetError(f"batch_size tem de ser >= 1, recebido {batch_size}")
    if len(samples) == 0:
        raise DatasetError("conjunto de dados vazio")
    with_ir = {sample.has_ir for sample in samples}
    if len(with_ir) > 1:
        raise DatasetError("mistura de amostras com e sem IR")

    order = np.arange(len(samples))
    if shuffle:
        order = np.random.default_rng(seed).permutation(len(samples))

    for index, start in enumerate(range(0, len(samples), batch_size)):
        this_seed = batch_seed(seed, index)
        rng = np.random.default_rng(this_seed)
        rgbs, irs, all_boxes, ids = [], [], [], []
        for position in order[start:start + batch_size]:
            sample = samples[int(position)]
            flip = augment and bool(rng.random() < FLIP_PROBABILITY)
            rgb, ir, boxes = prepare_sample(sample, img_size, flip)
            rgbs.append(rgb)
            irs.append(ir)
            all_boxes.append(boxes)
            ids.append(sample.sample_id)

        targets = [
            torch.tensor([box.to_row() for box in boxes], dtype=torch.float32).reshape(-1, 5)
            for boxes in all_boxes
        ]
        yield Batch(
            rgb=_to_tensor(rgbs),
            ir=_to_tensor(irs) if irs[0] is not None else None,
            targets=targets,
            boxes=all_boxes,
            sample_ids=ids,
            seed=this_seed,
        )
