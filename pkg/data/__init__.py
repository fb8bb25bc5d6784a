"""
Dados: cenas sintéticas RGB/IR, leitura/escrita no formato YOLO e
iterador de lotes.
"""

from data.samples import DatasetError, GroundTruthBox, ModalitySample
from data.synthetic import VISIBILITY_MODES, SceneSpec, generate_dataset, generate_scene
from data.yolo_dataset import export_yolo_dataset, load_yolo_dataset, parse_label_line
from data.batches import Batch, batch_seed, iterate_batches, letterbox

__all__ = [
    'DatasetError',
    'GroundTruthBox',
    'ModalitySample',
    'VISIBILITY_MODES',
    'SceneSpec',
    'generate_dataset',
    'generate_scene',
    'export_yolo_dataset',
    'load_yolo_dataset',
    'parse_label_line',
    'Batch',
    'batch_seed',
    'iterate_batches',
    'letterbox'
]
