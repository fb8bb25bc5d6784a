"""
Endpoints Flask do serviço de inferência.

O detetor é carregado uma vez, do checkpoint indicado em MODEL_CHECKPOINT
ou, na falta dele, inicializado aleatoriamente com a ModelConfig por
omissão. Os pedidos são servidos com um TimedDetectorDecorator para
reportar a latência.
"""
import logging
import os
from typing import Any, Dict, Optional

import numpy as np
from flask import jsonify, request

from config.settings import ModelConfig
from data.batches import iterate_batches
from data.samples import DatasetError, ModalitySample
from data.synthetic import SceneSpec, generate_scene
from decorators import TimedDetectorDecorator
from evaluation.metrics import match_image
from evaluation.params import count_params
from factories import DetectorFactory
from models.backbone import BackboneInputError
from models.checkpoint import load_checkpoint


logger = logging.getLogger(__name__)

DEFAULT_CONF_THRESHOLD = 0.25
DEFAULT_IOU_THRESHOLD = 0.6

_detector: Optional[TimedDetectorDecorator] = None


def get_detector() -> TimedDetectorDecorator:
    """Detetor partilhado pelos pedidos (criado no primeiro acesso)."""
    global _detector
    if _detector is None:
        checkpoint = os.environ.get('MODEL_CHECKPOINT')
        if checkpoint:
            model = DetectorFactory.create_from_checkpoint(load_checkpoint(checkpoint))
            logger.info("detetor carregado de %s", checkpoint)
        else:
            model = DetectorFactory.create_detector(ModelConfig(), seed=0)
            logger.warning("MODEL_CHECKPOINT não definido: detetor com pesos aleatórios")
        _detector = TimedDetectorDecorator(model)
    return _detector


def reset_detector() -> None:
    global _detector
    _detector = None


def _sample_from_request(data: Dict[str, Any], model_cfg: ModelConfig) -> ModalitySample:
    """
    Cena sintética ('seed', 'illumination' opcional) ou imagens em listas
    aninhadas ('rgb' H×W×3, 'ir' H×W ou H×W×1, valores em [0, 1]).
    """
    if 'seed' in data:
        spec = SceneSpec(img_size=model_cfg.img_size, num_classes=model_cfg.num_classes,
                         illumination=data.get('illumination'), seed=int(data['seed']))
        return generate_scene(spec)
    if 'rgb' not in data:
        raise DatasetError("é obrigatório 'seed' ou 'rgb'")
    rgb = np.asarray(data['rgb'], dtype=np.float32)
    ir = np.asarray(data['ir'], dtype=np.float32) if data.get('ir') is not None else None
    for name, image in (('rgb', rgb), ('ir', ir)):
        if image is not None and (not np.isfinite(image).all() or image.min() < 0 or image.max() > 1):
            raise DatasetError(f"'{name}' tem de ter valores finitos em [0, 1]")
    return ModalitySample('request', rgb, ir, [])


def register_detection_routes(app):
    """
    Registar rotas de inferência no Flask app.

    Args:
        app: Instância Flask
    """

    @app.route("/api/variants", methods=['GET'])
    def variants():
        """Variantes registadas na DetectorFactory."""
        return jsonify({
            'success': True,
            'variants': DetectorFactory.get_variant_catalog()
        })

    @app.route("/api/params", methods=['GET'])
    def params():
        """Parâmetros configuráveis do pedido de deteção e resumo do modelo carregado."""
        detector = get_detector()
        return jsonify({
            'success': True,
            'model': detector.describe(),
            'num_params': count_params(detector.detector),
            'request': [
                {"name": "seed", "type": "integer"},
                {"name": "illumination", "type": "float"},
                {"name": "rgb", "type": "array"},
                {"name": "ir", "type": "array"},
                {"name": "conf_threshold", "type": "float"},
                {"name": "iou_threshold", "type": "float"}
            ]
        })

    @app.route("/api/detect", methods=['POST'])
    def detect():
        """
        Deteta objetos numa cena.

        Body:
        {
            "seed": 7,                // cena sintética, ou
            "rgb": [[[...]]],         // imagens explícitas
            "ir": [[...]],
            "illumination": 0.3,
            "conf_threshold": 0.25,
            "iou_threshold": 0.6
        }
        """
        data = request.get_json(silent=True)
        if not isinstance(data, dict):
            return jsonify({
                'success': False,
                'error': 'corpo JSON obrigatório'
            }), 400

        detector = get_detector()
        model_cfg = detector.detector.cfg
        try:
            conf = float(data.get('conf_threshold', DEFAULT_CONF_THRESHOLD))
            iou = float(data.get('iou_threshold', DEFAULT_IOU_THRESHOLD))
            sample = _sample_from_request(data, model_cfg)
            batch = next(iterate_batches([sample], 1, seed=0, augment=False,
                                         img_size=model_cfg.img_size, shuffle=False))
            detections = detector.predict(batch.rgb, batch.ir, conf, iou)[0]
        except (DatasetError, BackboneInputError, ValueError, TypeError) as e:
            return jsonify({
                'success': False,
                'error': str(e)
            }), 400
        except Exception as e:
            logger.exception("falha na deteção")
            return jsonify({
                'success': False,
                'error': str(e)
            }), 500

        response = {
            'success': True,
            'sample_id': sample.sample_id,
            'detections': [det.to_dict() for det in detections],
            'latency_ms': detector.get_mean_latency_ms(),
            'config_hash': detector.detector.config_hash,
        }
        if batch.boxes[0]:
            match = match_image(detections, batch.boxes[0])
            response['ground_truth'] = [box.to_row() for box in batch.boxes[0]]
            response['true_positives'] = sum(match.true_positive)
            response['false_negatives'] = len(match.missed_gt)
        return jsonify(response)
