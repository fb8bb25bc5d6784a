"""
Leitura e escrita de conjuntos no formato YOLO com duas modalidades.

    root/
        images/rgb/<stem>.png
        images/ir/<stem>.png      (opcional; ausente → modo só RGB)
        labels/<stem>.txt         linhas "classe cx cy w h" normalizadas

Os pares são formados pelo nome do ficheiro sem extensão.
"""
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import cv2
import numpy as np

from data.samples import DatasetError, GroundTruthBox, ModalitySample


logger = logging.getLogger(__name__)

IMAGE_EXTENSIONS = ('.png', '.jpg', '.jpeg', '.bmp', '.tif', '.tiff')


def parse_label_line(text: str, path: str, line: int) -> Optional[GroundTruthBox]:
    """
    Uma linha de anotação → GroundTruthBox (None para linhas vazias).

    Raises:
        DatasetError: Número de campos, valores não numéricos ou caixa inválida,
            com o ficheiro e a linha
    """
    fields = text.split()
    if not fields:
        return None
    if len(fields) != 5:
        raise DatasetError(f"esperados 5 campos, encontrados {len(fields)}", path, line)
    try:
        class_value = float(fields[0])
        cx, cy, w, h = (float(v) for v in fields[1:])
    except ValueError as exc:
        raise DatasetError(f"valor não numérico: {exc}", path, line) from exc
    if class_value != int(class_value):
        raise DatasetError(f"classe não inteira: {fields[0]}", path, line)
    try:
        return GroundTruthBox(int(class_value), cx, cy, w, h)
    except DatasetError as exc:
        raise DatasetError(str(exc), path, line) from exc


def read_labels(path: Path) -> List[GroundTruthBox]:
    if not path.is_file():
        return []
    boxes = []
    for number, text in enumerate(path.read_text(encoding='utf-8').splitlines(), start=1):
        box = parse_label_line(text, str(path), number)
        if box is not None:
            boxes.append(box)
    return boxes


def _index_images(folder: Path) -> Dict[str, Path]:
    return {
        path.stem: path
        for path in sorted(folder.iterdir())
        if path.is_file() and path.suffix.lower() in IMAGE_EXTENSIONS
    }


def _read_rgb(path: Path) -> np.ndarray:
    image = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if image is None:
        raise DatasetError("imagem ilegível", str(path))
    return cv2.cvtColor(image, cv2.COLOR_BGR2RGB).astype(np.float32) / 255.0


def _read_ir(path: Path) -> np.ndarray:
    image = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if image is None:
        raise DatasetError("imagem ilegível", str(path))
    return (image.astype(np.float32) / 255.0)[:, :, None]


def load_yolo_dataset(root: str, rgb_dir: str = 'images/rgb', ir_dir: str = 'images/ir',
                      labels_dir: str = 'labels') -> List[ModalitySample]:
    """
    Lê todas as amostras por ordem de stem.

    Raises:
        DatasetError: Diretório RGB inexistente, stems RGB/IR diferentes,
            anotação malformada
    """
    base = Path(root)
    rgb_folder = base / rgb_dir
    if not rgb_folder.is_dir():
        raise DatasetError(f"diretório RGB inexistente: {rgb_folder}")
    rgb_images = _index_images(rgb_folder)

    ir_folder = base / ir_dir
    ir_images: Optional[Dict[str, Path]] = None
    if ir_folder.is_dir():
        ir_images = _index_images(ir_folder)
        only_rgb = sorted(set(rgb_images) - set(ir_images))
        only_ir = sorted(set(ir_images) - set(rgb_images))
        if only_rgb or only_ir:
            raise DatasetError(
                f"stems RGB/IR não emparelhados (só RGB: {only_rgb[:5]}, só IR: {only_ir[:5]})",
                str(base),
            )
    else:
        logger.info("%s sem %s: modo de uma modalidade (RGB)", base, ir_dir)

    samples = []
    for stem in sorted(rgb_images):
        rgb = _read_rgb(rgb_images[stem])
        ir = _read_ir(ir_images[stem]) if ir_images is not None else None
        boxes = read_labels(base / labels_dir / f"{stem}.txt")
        samples.append(ModalitySample(stem, rgb, ir, boxes, {'source': str(rgb_images[stem])}))
    logger.debug("%d amostras lidas de %s", len(samples), base)
    return samples


def export_yolo_dataset(samples: Iterable[ModalitySample], root: str) -> int:
    """
    Escreve as amostras na estrutura lida por load_yolo_dataset (PNG de 8 bits).

    Returns:
        Número de amostras escritas
    """
    base = Path(root)
    (base / 'images' / 'rgb').mkdir(parents=True, exist_ok=True)
    (base / 'labels').mkdir(parents=True, exist_ok=True)
    count = 0
    for sample in samples:
        rgb8 = np.round(np.clip(sample.rgb, 0.0, 1.0) * 255.0).astype(np.uint8)
        cv2.imwrite(str(base / 'images' / 'rgb' / f"{sample.sample_id}.png"),
                    cv2.cvtColor(rgb8, cv2.COLOR_RGB2BGR))
        if sample.ir is not None:
            (base / 'images' / 'ir').mkdir(parents=True, exist_ok=True)
            ir8 = np.round(np.clip(sample.ir[:, :, 0], 0.0, 1.0) * 255.0).astype(np.uint8)
            cv2.imwrite(str(base / 'images' / 'ir' / f"{sample.sample_id}.png"), ir8)
        lines = [box.to_label_line() for box in sample.boxes]
        (base / 'labels' / f"{sample.sample_id}.txt").write_text(
            '\n'.join(lines) + ('\n' if lines else ''), encoding='utf-8')
        count += 1
    return count
